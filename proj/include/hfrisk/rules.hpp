#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hfrisk/features.hpp"

namespace hfrisk {

enum class Comparator { less, less_equal, greater, greater_equal, equal };

std::string_view to_string(Comparator c);

struct Rule {
  std::string name;
  std::size_t feature = 0;  // schema index
  Comparator comparator = Comparator::less;
  double threshold = 0.0;
  double weight = 1.0;

  bool fires(double value) const;
  std::string_view feature_name() const { return kFeatureNames[feature]; }

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleSet {
  std::vector<Rule> rules;
  std::string version;

  double total_weight() const;
  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

/// Rule DSL, one rule per line:
///
///     name: feature comparator threshold [weight w]
///
/// Comparators are <, <=, >, >=, = (and the symbols ≤, ≥). `#` starts a
/// comment. An optional `@version <tag>` line names the set.
RuleSet parse_ruleset(std::string_view text, const std::string& source = "rules");
RuleSet load_ruleset_file(const std::string& path);
std::string serialize(const RuleSet& rules);

/// Documented stand-in thresholds (version "default-v1").
RuleSet default_ruleset();

/// Weighted fraction of fired rules, in [0, 1]; 0 for an empty set.
double evaluate(const RuleSet& rules, std::span<const double> features);
/// Partial feature vector; throws ValidationError when a referenced feature
/// is absent.
double evaluate(const RuleSet& rules, std::span<const std::optional<double>> features);

/// Names of rules that fire, in rule order.
std::vector<std::string> fired_rules(const RuleSet& rules, std::span<const double> features);

}  // namespace hfrisk
