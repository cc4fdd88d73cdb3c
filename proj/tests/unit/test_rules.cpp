#include <doctest.h>

#include <optional>

#include "hfrisk/error.hpp"
#include "hfrisk/random.hpp"
#include "hfrisk/rules.hpp"

using namespace hfrisk;

namespace {

FeatureVector normal_day() {
  FeatureVector x(kFeatureCount, 0.0);
  x[index_of(Feature::age)] = 70;
  x[index_of(Feature::nyha)] = 2;
  x[index_of(Feature::lvef_pct)] = 40;
  x[index_of(Feature::weight_kg)] = 80;
  x[index_of(Feature::sys_bp_mmhg)] = 125;
  x[index_of(Feature::dia_bp_mmhg)] = 80;
  x[index_of(Feature::spo2_pct)] = 96;
  x[index_of(Feature::hr_bpm)] = 72;
  x[index_of(Feature::sinus_rhythm)] = 1;
  x[index_of(Feature::wellbeing)] = 4;
  return x;
}

}  // namespace

TEST_CASE("parse_ruleset grammar") {
  const auto one = parse_ruleset("low_spo2: spo2_pct < 90 weight 2\n");
  REQUIRE(one.rules.size() == 1);
  CHECK(one.rules[0].name == "low_spo2");
  CHECK(one.rules[0].feature == index_of(Feature::spo2_pct));
  CHECK(one.rules[0].comparator == Comparator::less);
  CHECK(one.rules[0].threshold == 90);
  CHECK(one.rules[0].weight == 2);

  const auto set = parse_ruleset(
      "@version site-3\n"
      "# comment line\n"
      "\n"
      "a: hr_bpm ≥ 100   # trailing comment\n"
      "b: weight_diff_3d >= -1.5 weight 0.5\n"
      "c: wellbeing ≤ 2\n"
      "d: atrial_fibrillation = 1\n");
  CHECK(set.version == "site-3");
  REQUIRE(set.rules.size() == 4);
  CHECK(set.rules[0].comparator == Comparator::greater_equal);
  CHECK(set.rules[0].weight == 1.0);
  CHECK(set.rules[1].threshold == -1.5);
  CHECK(set.rules[2].comparator == Comparator::less_equal);
  CHECK(set.rules[3].comparator == Comparator::equal);

  const auto empty = parse_ruleset("");
  CHECK(empty.rules.empty());
  CHECK(evaluate(empty, normal_day()) == 0.0);
}

TEST_CASE("parse_ruleset errors") {
  CHECK_THROWS_AS(parse_ruleset("x: heart_rate_xyz > 100\n"), ParseError);
  CHECK_THROWS_AS(parse_ruleset("x: hr_bpm >> 100\n"), ParseError);
  CHECK_THROWS_AS(parse_ruleset("x: hr_bpm > fast\n"), ParseError);
  CHECK_THROWS_AS(parse_ruleset("x: hr_bpm > 100 weight 0\n"), ParseError);
  CHECK_THROWS_AS(parse_ruleset("x: hr_bpm > 100 weight -1\n"), ParseError);
  CHECK_THROWS_AS(parse_ruleset("hr_bpm > 100\n"), ParseError);
  try {
    parse_ruleset("a: hr_bpm > 100\n# note\na: hr_bpm < 40\n", "site.rules");
    FAIL("expected duplicate name error");
  } catch (const ParseError& e) {
    CHECK(e.file() == "site.rules");
    CHECK(e.line() == 3);
  }
}

TEST_CASE("evaluate is the weighted share of fired rules") {
  std::string text;
  for (int i = 0; i < 8; ++i) text += "r" + std::to_string(i) + ": hr_bpm > " + std::to_string(100 + 10 * i) + "\n";
  const auto eight = parse_ruleset(text);
  auto x = normal_day();
  x[index_of(Feature::hr_bpm)] = 105;
  CHECK(evaluate(eight, x) == 0.125);
  x[index_of(Feature::hr_bpm)] = 50;
  CHECK(evaluate(eight, x) == 0.0);
  x[index_of(Feature::hr_bpm)] = 500;
  CHECK(evaluate(eight, x) == 1.0);
  CHECK(fired_rules(eight, x).size() == 8);
}

TEST_CASE("default ruleset") {
  const auto d = default_ruleset();
  CHECK(d.rules.size() == 10);
  CHECK(d.total_weight() == 13);
  CHECK(d.version == "default-v1");
  CHECK(parse_ruleset(serialize(d)) == d);

  auto x = normal_day();
  CHECK(evaluate(d, x) == 0.0);
  CHECK(fired_rules(d, x).empty());

  x[index_of(Feature::spo2_pct)] = 88;
  x[index_of(Feature::weight_diff_3d)] = 2.5;
  const auto fired = fired_rules(d, x);
  CHECK(fired == std::vector<std::string>{"low_spo2", "rapid_weight_gain"});
  CHECK(evaluate(d, x) == doctest::Approx(4.0 / 13.0));

  x[index_of(Feature::ventricular_tachycardia)] = 1;
  x[index_of(Feature::sinus_rhythm)] = 0;
  CHECK(evaluate(d, x) == doctest::Approx(6.0 / 13.0));
}

TEST_CASE("partial features") {
  const auto d = default_ruleset();
  const auto full = normal_day();
  std::vector<std::optional<double>> partial(full.begin(), full.end());
  CHECK(evaluate(d, partial) == 0.0);
  partial[index_of(Feature::spo2_pct)].reset();
  CHECK_THROWS_AS(evaluate(d, partial), ValidationError);
  const auto only_hr = parse_ruleset("t: hr_bpm > 120\n");
  CHECK(evaluate(only_hr, partial) == 0.0);
}

TEST_CASE("score range and monotonicity over random days") {
  const auto d = default_ruleset();
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    FeatureVector x(kFeatureCount);
    for (auto& v : x) v = rng.normal(0, 100);
    x[index_of(Feature::atrial_fibrillation)] = rng.bernoulli(0.5) ? 1 : 0;
    const double s = evaluate(d, x);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(evaluate(d, x) == s);
    // Pushing spo2 below its threshold can only add fired rules.
    auto worse = x;
    worse[index_of(Feature::spo2_pct)] = 50;
    CHECK(evaluate(d, worse) >= s);
  }
}
