#include "hfrisk/rules.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hfrisk/error.hpp"
#include "hfrisk/text.hpp"

namespace hfrisk {

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::less:
      return "<";
    case Comparator::less_equal:
      return "<=";
    case Comparator::greater:
      return ">";
    case Comparator::greater_equal:
      return ">=";
    case Comparator::equal:
      return "=";
  }
  return "=";
}

bool Rule::fires(double value) const {
  switch (comparator) {
    case Comparator::less:
      return value < threshold;
    case Comparator::less_equal:
      return value <= threshold;
    case Comparator::greater:
      return value > threshold;
    case Comparator::greater_equal:
      return value >= threshold;
    case Comparator::equal:
      return value == threshold;
  }
  return false;
}

double RuleSet::total_weight() const {
  double w = 0.0;
  for (const auto& r : rules) w += r.weight;
  return w;
}

namespace {

std::optional<Comparator> parse_comparator(std::string_view s) {
  if (s == "<") return Comparator::less;
  if (s == "<=" || s == "≤") return Comparator::less_equal;
  if (s == ">") return Comparator::greater;
  if (s == ">=" || s == "≥") return Comparator::greater_equal;
  if (s == "=" || s == "==") return Comparator::equal;
  return std::nullopt;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
      return false;
    }
  }
  return true;
}

// Whitespace-separated tokens with their 1-based columns.
std::vector<std::pair<std::string_view, std::size_t>> tokens(std::string_view line,
                                                             std::size_t offset) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start), offset + start + 1);
  }
  return out;
}

}  // namespace

RuleSet parse_ruleset(std::string_view text, const std::string& source) {
  RuleSet set;
  std::set<std::string, std::less<>> names;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (text::trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fail = [&](std::size_t col, const std::string& what) -> void {
      throw ParseError(source, line_no, col, what);
    };

    auto toks = tokens(line, 0);
    if (toks.front().first == "@version") {
      if (toks.size() != 2) fail(toks.front().second, "expected '@version <tag>'");
      set.version = std::string(toks[1].first);
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail(1, "expected 'name: feature comparator threshold'");
    const auto name = text::trim(line.substr(0, colon));
    if (!valid_name(name)) fail(1, "invalid rule name '" + std::string(name) + "'");
    toks = tokens(line.substr(colon + 1), colon + 1);
    if (toks.size() != 3 && toks.size() != 5) {
      fail(colon + 2, "expected 'feature comparator threshold [weight w]'");
    }
    Rule r;
    r.name = std::string(name);
    auto feature = feature_index(toks[0].first);
    if (!feature) fail(toks[0].second, "unknown feature '" + std::string(toks[0].first) + "'");
    r.feature = *feature;
    auto cmp = parse_comparator(toks[1].first);
    if (!cmp) fail(toks[1].second, "invalid comparator '" + std::string(toks[1].first) + "'");
    r.comparator = *cmp;
    auto threshold = text::parse_double(toks[2].first);
    if (!threshold || !std::isfinite(*threshold)) {
      fail(toks[2].second, "invalid threshold '" + std::string(toks[2].first) + "'");
    }
    r.threshold = *threshold;
    if (toks.size() == 5) {
      if (toks[3].first != "weight") fail(toks[3].second, "expected 'weight'");
      auto w = text::parse_double(toks[4].first);
      if (!w || !std::isfinite(*w) || *w <= 0.0) {
        fail(toks[4].second, "weight must be a positive number");
      }
      r.weight = *w;
    }
    if (!names.insert(r.name).second) fail(1, "duplicate rule name '" + r.name + "'");
    set.rules.push_back(std::move(r));
    if (end == text.size()) break;
  }
  return set;
}

RuleSet load_ruleset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ruleset(buf.str(), path);
}

std::string serialize(const RuleSet& rules) {
  std::string out;
  if (!rules.version.empty()) out += "@version " + rules.version + "\n";
  for (const auto& r : rules.rules) {
    out += r.name + ": " + std::string(r.feature_name()) + " " + std::string(to_string(r.comparator)) +
           " " + text::format_double(r.threshold);
    if (r.weight != 1.0) out += " weight " + text::format_double(r.weight);
    out += "\n";
  }
  return out;
}

RuleSet default_ruleset() {
  constexpr std::string_view kDefault = R"(@version default-v1
# Stand-in thresholds for a heart-failure telemonitoring rule baseline.
low_spo2: spo2_pct < 90 weight 2
rapid_weight_gain: weight_diff_3d >= 2.0 weight 2
weight_gain_8d: weight_diff_8d >= 2.5
hypotension: sys_bp_mmhg < 90
hypertension: sys_bp_mmhg > 160
bradycardia: hr_bpm < 50
tachycardia: hr_bpm > 120
new_af: atrial_fibrillation = 1
vt: ventricular_tachycardia = 1 weight 2
poor_wellbeing: wellbeing <= 2
)";
  return parse_ruleset(kDefault, "default_ruleset");
}

double evaluate(const RuleSet& rules, std::span<const double> features) {
  const double total = rules.total_weight();
  if (rules.rules.empty() || total <= 0.0) return 0.0;
  double fired = 0.0;
  for (const auto& r : rules.rules) {
    if (r.feature >= features.size()) {
      throw ValidationError("rule " + r.name + ": feature " + std::string(r.feature_name()) +
                            " missing");
    }
    if (r.fires(features[r.feature])) fired += r.weight;
  }
  return std::clamp(fired / total, 0.0, 1.0);
}

double evaluate(const RuleSet& rules, std::span<const std::optional<double>> features) {
  std::vector<double> dense(features.size(), 0.0);
  for (const auto& r : rules.rules) {
    if (r.feature >= features.size() || !features[r.feature]) {
      throw ValidationError("rule " + r.name + ": feature " + std::string(r.feature_name()) +
                            " missing for this day");
    }
    dense[r.feature] = *features[r.feature];
  }
  return evaluate(rules, dense);
}

std::vector<std::string> fired_rules(const RuleSet& rules, std::span<const double> features) {
  std::vector<std::string> out;
  for (const auto& r : rules.rules) {
    if (r.feature < features.size() && r.fires(features[r.feature])) out.push_back(r.name);
  }
  return out;
}

}  // namespace hfrisk
