#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hfrisk/metrics.hpp"
#include "hfrisk/mlp.hpp"
#include "hfrisk/pipeline.hpp"
#include "hfrisk/rules.hpp"

namespace hfrisk {

/// Everything needed to turn a cohort into a trained model.
struct ExperimentConfig {
  std::vector<int> hidden = {35, 20, 35};
  std::vector<Activation> activations = {Activation::relu, Activation::relu, Activation::relu};
  std::vector<double> dropout_rates = {0.25, 0.15, 0.3};
  TrainConfig train;
  std::uint64_t split_seed = 1;
  int label_horizon_days = 0;
};

/// Raw split plus the balanced, standardized copy used for training.
struct PreparedData {
  DatasetSplit raw;
  DatasetSplit ready;
};

PreparedData prepare(const std::vector<LabeledSample>& samples, std::uint64_t seed);
/// Balances and standardizes an existing split, keeping its scaler.
PreparedData prepare(DatasetSplit raw, std::uint64_t seed);

MlpModel init_for(const ExperimentConfig& config, std::size_t input_dim = kFeatureCount);

struct Experiment {
  PreparedData data;
  TrainResult trained;
};

/// assemble -> split -> oversample -> standardize -> train.
Experiment run_experiment(const Cohort& cohort, const ExperimentConfig& config);
Experiment run_experiment(const std::vector<LabeledSample>& samples, const ExperimentConfig& config);
Experiment run_experiment(const DatasetSplit& raw, const ExperimentConfig& config);

ModelProvenance provenance_of(const ExperimentConfig& config);

/// Flat `key = value` file, `#` comments. Keys: hidden (comma list),
/// activation, dropout (comma list), learning_rate, batch_size, max_epochs,
/// patience (integer or none), seed, split_seed, label_horizon_days.
/// Omitted keys keep their defaults; unknown keys are errors.
ExperimentConfig parse_experiment_config(std::istream& in, const std::string& name = "experiment");
ExperimentConfig load_experiment_config(const std::filesystem::path& file);
void write_experiment_config(std::ostream& out, const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

/// Either a trained model or a rule set, applied to raw feature vectors.
class Scorer {
 public:
  explicit Scorer(MlpModel model) : impl_(std::move(model)) {}
  explicit Scorer(RuleSet rules) : impl_(std::move(rules)) {}

  std::vector<double> score(const std::vector<FeatureVector>& features) const;
  double score(const FeatureVector& features) const;
  bool is_model() const { return std::holds_alternative<MlpModel>(impl_); }
  std::string_view kind() const { return is_model() ? "model" : "rules"; }
  const MlpModel* model() const { return std::get_if<MlpModel>(&impl_); }
  const RuleSet* rules() const { return std::get_if<RuleSet>(&impl_); }

 private:
  std::variant<MlpModel, RuleSet> impl_;
};

ScoredSet score_samples(const Scorer& scorer, const std::vector<LabeledSample>& samples);

}  // namespace hfrisk
