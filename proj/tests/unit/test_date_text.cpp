#include <doctest.h>

#include <stdexcept>

#include "hfrisk/date.hpp"
#include "hfrisk/text.hpp"

using namespace hfrisk;

TEST_CASE("date parse and format") {
  const Date d = Date::parse("2014-02-28");
  CHECK(d.iso() == "2014-02-28");
  CHECK((d + 1).iso() == "2014-03-01");
  CHECK((Date::parse("2016-03-01") - Date::parse("2016-02-28")) == 2);
  CHECK(Date::from_serial(d.serial()) == d);
  CHECK_THROWS_AS(Date::parse("2014-2-28"), std::invalid_argument);
  CHECK_THROWS_AS(Date::parse("2014-02-30"), std::invalid_argument);
  CHECK_THROWS_AS(Date::parse("20140228"), std::invalid_argument);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 80.0, -2.5e-300, 1e22, 0.0}) {
    CHECK(text::parse_double(text::format_double(v)).value() == v);
  }
  CHECK(text::format_double(80.0) == "80");
  CHECK(text::format_double(0.5) == "0.5");
}

TEST_CASE("parse helpers reject junk") {
  CHECK_FALSE(text::parse_double("1.0x").has_value());
  CHECK_FALSE(text::parse_double("").has_value());
  CHECK_FALSE(text::parse_int("3.0").has_value());
  CHECK(text::parse_int("-12").value() == -12);
  CHECK(text::trim("  a b \t") == "a b");
  CHECK(text::split("a,,b").size() == 3);
}
