#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfrisk/features.hpp"
#include "hfrisk/pipeline.hpp"

namespace hfrisk {

class Rng;

enum class Activation { relu, sigmoid, linear };

std::string_view to_string(Activation a);
std::optional<Activation> parse_activation(std::string_view text);

inline constexpr double kMaxDropout = 0.5;

/// Feedforward binary classifier with a sigmoid output unit.
///
/// `layer_dims` is (input, hidden..., 1). Layer l maps layer_dims[l] to
/// layer_dims[l + 1]; `activations` and `dropout_rates` have one entry per
/// hidden layer. The scaler is the one fitted on the training split and is
/// applied by predict() to raw feature vectors.
struct MlpModel {
  std::vector<int> layer_dims;
  std::vector<Activation> activations;
  std::vector<double> dropout_rates;
  std::vector<Eigen::MatrixXd> weights;  // fan_out x fan_in
  std::vector<Eigen::VectorXd> biases;
  std::string feature_schema_version{kFeatureSchemaVersion};
  std::vector<std::string> feature_names;
  Scaler scaler;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(layer_dims.front()); }
  std::size_t parameter_count() const;

  /// Throws ValidationError when shapes, rates or values are inconsistent.
  void validate() const;
};

/// He-normal weights for relu layers, Glorot-uniform otherwise; zero biases.
/// The output layer (sigmoid) uses Glorot.
MlpModel init_model(const std::vector<int>& layer_dims, const std::vector<Activation>& activations,
                    const std::vector<double>& dropout_rates, std::uint64_t seed);

/// Model with the default schema names attached.
MlpModel init_default_model(std::uint64_t seed);

enum class ForwardMode { train, inference };

/// Per-layer intermediates kept by a train-mode forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;       // a_{l-1}, one per layer
  std::vector<Eigen::MatrixXd> preacts;      // z_l
  std::vector<Eigen::MatrixXd> masks;        // scaled dropout masks (hidden layers)
  Eigen::RowVectorXd output;                 // sigmoid(z_L)
};

/// Batch is feature-major: one column per sample. In train mode, `rng`
/// supplies the dropout masks; `cache` (optional) receives intermediates.
Eigen::RowVectorXd forward(const MlpModel& model, const Eigen::MatrixXd& batch, ForwardMode mode,
                           Rng* rng = nullptr, ForwardCache* cache = nullptr);

inline constexpr double kBceEpsilon = 1e-12;

/// Mean binary cross-entropy with probabilities clamped to [eps, 1 - eps].
double bce_loss(std::span<const double> probabilities, std::span<const double> labels);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Exact gradients of mean BCE with respect to every parameter, through the
/// masks recorded in `cache`.
Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   std::span<const double> labels);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  long step = 0;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;

  static AdamState zeros_like(const MlpModel& model);
};

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads, double learning_rate,
               const AdamConfig& adam = {});

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 4096;
  int max_epochs = 453;
  AdamConfig adam;
  /// Epochs without validation improvement before stopping; nullopt = off.
  std::optional<int> patience = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_auc = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;

  double best_validation_auc() const;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Mini-batch Adam on split.train (already standardized and balanced).
/// Returns the parameters of the epoch with the best validation AUCROC
/// (earliest on ties) and attaches split.scaler to the model.
TrainResult train(MlpModel model, const DatasetSplit& split, const TrainConfig& config);

/// Scores raw feature vectors: standardize with `scaler`, then an
/// inference-mode forward pass.
std::vector<double> predict(const MlpModel& model, const Scaler& scaler,
                            const std::vector<FeatureVector>& features);
/// Uses the scaler stored in the model.
std::vector<double> predict(const MlpModel& model, const std::vector<FeatureVector>& features);
/// Rejects feature vectors built under a different schema version.
std::vector<double> predict(const MlpModel& model, std::string_view schema_version,
                            const std::vector<FeatureVector>& features);

/// Inference on vectors that are already standardized.
std::vector<double> predict_standardized(const MlpModel& model,
                                         const std::vector<FeatureVector>& features);

// ---- hyperparameter search ------------------------------------------------

struct SearchSpace {
  int min_hidden_layers = 2;
  int max_hidden_layers = 5;
  int min_neurons = 5;
  int max_neurons = 150;
  std::vector<Activation> activations = {Activation::linear, Activation::sigmoid,
                                         Activation::relu};
  double max_dropout = 0.5;
  int budget = 10;
  std::uint64_t seed = 1;
};

struct Candidate {
  std::vector<int> hidden;
  Activation activation = Activation::relu;
  std::vector<double> dropout_rates;
};

Candidate sample_candidate(const SearchSpace& space, Rng& rng);

struct LeaderboardEntry {
  int trial = 0;
  Candidate candidate;
  double validation_auc = 0.0;
  int selected_epoch = 0;
};

struct SearchResult {
  MlpModel best;
  std::vector<LeaderboardEntry> leaderboard;  // sorted best first
};

SearchResult random_search(const SearchSpace& space, const DatasetSplit& split,
                           const TrainConfig& base);

// ---- model file ------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

/// Metadata written next to the parameters so a model can reproduce its
/// evaluation split.
struct ModelProvenance {
  std::optional<std::uint64_t> split_seed;
  std::optional<int> label_horizon_days;
};

void save_model(std::ostream& out, const MlpModel& model, const ModelProvenance& provenance = {});
MlpModel load_model(std::istream& in, ModelProvenance* provenance = nullptr);
void save_model_file(const std::filesystem::path& path, const MlpModel& model,
                     const ModelProvenance& provenance = {});
MlpModel load_model_file(const std::filesystem::path& path, ModelProvenance* provenance = nullptr);

Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& rows);

}  // namespace hfrisk
