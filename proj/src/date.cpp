#include "hfrisk/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace hfrisk {

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  return Date(std::chrono::sys_days{ymd});
}

Date Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(iso) + "'");
  }
  auto field = [&](std::size_t pos, std::size_t len) {
    unsigned value = 0;
    const char* first = iso.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len) {
      throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(iso) + "'");
    }
    return value;
  };
  try {
    return from_ymd(static_cast<int>(field(0, 4)), field(5, 2), field(8, 2));
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("invalid date '" + std::string(iso) + "'");
  }
}

std::string Date::iso() const {
  const std::chrono::year_month_day ymd{day_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace hfrisk
