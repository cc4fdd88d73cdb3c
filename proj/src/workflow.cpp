#include "hfrisk/workflow.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "hfrisk/error.hpp"
#include "hfrisk/text.hpp"
#include "hfrisk/random.hpp"

namespace hfrisk {

PreparedData prepare(const std::vector<LabeledSample>& samples, std::uint64_t seed) {
  return prepare(split_by_patient(samples, seed), seed);
}

PreparedData prepare(DatasetSplit raw, std::uint64_t seed) {
  PreparedData d;
  d.raw = std::move(raw);
  if (d.raw.scaler.empty()) d.raw.scaler = fit_scaler(d.raw.train);
  DatasetSplit balanced = d.raw;
  balanced.train = oversample_minority(d.raw.train, mix_seed(seed, 7));
  d.ready = standardize(balanced);
  return d;
}

MlpModel init_for(const ExperimentConfig& config, std::size_t input_dim) {
  std::vector<int> dims{static_cast<int>(input_dim)};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(1);
  auto m = init_model(dims, config.activations, config.dropout_rates, config.train.seed);
  if (input_dim == kFeatureCount) m.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  return m;
}

Experiment run_experiment(const std::vector<LabeledSample>& samples, const ExperimentConfig& config) {
  validate(config);
  Experiment e;
  e.data = prepare(samples, config.split_seed);
  e.trained = train(init_for(config), e.data.ready, config.train);
  return e;
}

Experiment run_experiment(const DatasetSplit& raw, const ExperimentConfig& config) {
  Experiment e;
  validate(config);
  e.data = prepare(raw, config.split_seed);
  e.trained = train(init_for(config), e.data.ready, config.train);
  return e;
}

Experiment run_experiment(const Cohort& cohort, const ExperimentConfig& config) {
  return run_experiment(assemble_samples(cohort, config.label_horizon_days), config);
}

ModelProvenance provenance_of(const ExperimentConfig& config) {
  return {config.split_seed, config.label_horizon_days};
}

void validate(const ExperimentConfig& config) {
  if (config.hidden.empty()) throw ValidationError("experiment: at least one hidden layer");
  if (config.activations.size() != config.hidden.size() || config.dropout_rates.size() != config.hidden.size()) {
    throw ValidationError("experiment: hidden, activation and dropout lists differ in length");
  }
  for (int n : config.hidden) {
    if (n < 1) throw ValidationError("experiment: hidden layer sizes must be >= 1");
  }
  for (double r : config.dropout_rates) {
    if (!(r >= 0.0 && r <= kMaxDropout)) throw ValidationError("experiment: dropout must be in [0, 0.5]");
  }
  if (config.label_horizon_days < 0) throw ValidationError("experiment: label_horizon_days must be >= 0");
  config.train.validate();
}

namespace {

template <typename T>
std::optional<std::vector<T>> parse_list(std::string_view value, std::optional<T> (*one)(std::string_view)) {
  std::vector<T> out;
  for (auto part : text::split(value, ',')) {
    auto v = one(text::trim(part));
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::optional<int> int_of(std::string_view s) {
  auto v = text::parse_int(s);
  if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) return std::nullopt;
  return static_cast<int>(*v);
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + text::format_double(v[i]);
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in, const std::string& name) {
  ExperimentConfig c;
  std::optional<Activation> activation;
  using Setter = std::function<bool(std::string_view)>;
  const std::unordered_map<std::string_view, Setter> keys{
      {"hidden", [&](std::string_view v) {
         auto l = parse_list<int>(v, int_of);
         if (l) c.hidden = *l;
         return l.has_value();
       }},
      {"activation", [&](std::string_view v) { return (activation = parse_activation(v)).has_value(); }},
      {"dropout", [&](std::string_view v) {
         auto l = parse_list<double>(v, text::parse_double);
         if (l) c.dropout_rates = *l;
         return l.has_value();
       }},
      {"learning_rate", [&](std::string_view v) {
         auto d = text::parse_double(v);
         if (d) c.train.learning_rate = *d;
         return d.has_value();
       }},
      {"batch_size", [&](std::string_view v) {
         auto n = text::parse_int(v);
         if (n && *n > 0) c.train.batch_size = static_cast<std::size_t>(*n);
         return n && *n > 0;
       }},
      {"max_epochs", [&](std::string_view v) {
         auto n = int_of(v);
         if (n) c.train.max_epochs = *n;
         return n.has_value();
       }},
      {"patience", [&](std::string_view v) {
         if (v == "none") {
           c.train.patience.reset();
           return true;
         }
         auto n = int_of(v);
         if (n) c.train.patience = *n;
         return n.has_value();
       }},
      {"seed", [&](std::string_view v) {
         auto n = text::parse_int(v);
         if (n && *n >= 0) c.train.seed = static_cast<std::uint64_t>(*n);
         return n && *n >= 0;
       }},
      {"split_seed", [&](std::string_view v) {
         auto n = text::parse_int(v);
         if (n && *n >= 0) c.split_seed = static_cast<std::uint64_t>(*n);
         return n && *n >= 0;
       }},
      {"label_horizon_days", [&](std::string_view v) {
         auto n = int_of(v);
         if (n) c.label_horizon_days = *n;
         return n.has_value();
       }},
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = text::trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) throw ParseError(name, line_no, 1, "expected key = value");
    const auto key = text::trim(v.substr(0, eq));
    auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(name, line_no, 1, "unknown key '" + std::string(key) + "'");
    if (!it->second(text::trim(v.substr(eq + 1)))) {
      throw ParseError(name, line_no, eq + 2, "invalid value for " + std::string(key));
    }
  }
  if (activation) c.activations.assign(c.hidden.size(), *activation);
  if (c.activations.size() != c.hidden.size() && !c.activations.empty()) {
    // A new depth without an explicit activation reuses the first one.
    c.activations.assign(c.hidden.size(), c.activations.front());
  }
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + file.string());
  return parse_experiment_config(in, file.string());
}

void write_experiment_config(std::ostream& out, const ExperimentConfig& config) {
  out << "hidden = " << join_ints(config.hidden) << '\n';
  out << "activation = " << to_string(config.activations.empty() ? Activation::relu : config.activations.front())
      << '\n';
  out << "dropout = " << join_doubles(config.dropout_rates) << '\n';
  out << "learning_rate = " << text::format_double(config.train.learning_rate) << '\n';
  out << "batch_size = " << config.train.batch_size << '\n';
  out << "max_epochs = " << config.train.max_epochs << '\n';
  out << "patience = " << (config.train.patience ? std::to_string(*config.train.patience) : "none") << '\n';
  out << "seed = " << config.train.seed << '\n';
  out << "split_seed = " << config.split_seed << '\n';
  out << "label_horizon_days = " << config.label_horizon_days << '\n';
}

std::vector<double> Scorer::score(const std::vector<FeatureVector>& features) const {
  if (const auto* m = model()) return predict(*m, features);
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& x : features) out.push_back(evaluate(*rules(), x));
  return out;
}

double Scorer::score(const FeatureVector& features) const {
  return score(std::vector<FeatureVector>{features}).front();
}

ScoredSet score_samples(const Scorer& scorer, const std::vector<LabeledSample>& samples) {
  std::vector<FeatureVector> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.features);
  return make_scored(scorer.score(rows), samples);
}

}  // namespace hfrisk
