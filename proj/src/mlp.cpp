#include "hfrisk/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hfrisk/error.hpp"
#include "hfrisk/metrics.hpp"
#include "hfrisk/random.hpp"

namespace hfrisk {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      return "linear";
  }
  return "linear";
}

std::optional<Activation> parse_activation(std::string_view text) {
  if (text == "relu") return Activation::relu;
  if (text == "sigmoid") return Activation::sigmoid;
  if (text == "linear") return Activation::linear;
  return std::nullopt;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::sigmoid:
      return z.unaryExpr(&sigmoid);
    case Activation::linear:
      return z;
  }
  return z;
}

Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::relu:
      return (z.array() > 0.0).cast<double>().matrix();
    case Activation::sigmoid:
      return z.unaryExpr([](double v) {
        const double s = sigmoid(v);
        return s * (1.0 - s);
      });
    case Activation::linear:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

void MlpModel::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("mlp: " + what); };
  if (layer_dims.size() < 2) fail("need at least input and output dims");
  for (int d : layer_dims) {
    if (d <= 0) fail("layer dims must be positive");
  }
  if (layer_dims.back() != 1) fail("output dim must be 1");
  const std::size_t hidden = layer_dims.size() - 2;
  if (activations.size() != hidden) fail("one activation per hidden layer required");
  if (dropout_rates.size() != hidden) fail("one dropout rate per hidden layer required");
  for (double r : dropout_rates) {
    if (!(r >= 0.0 && r <= kMaxDropout)) fail("dropout rates must be in [0, 0.5]");
  }
  if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
    fail("parameter count does not match layer dims");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1]) {
      fail("layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) fail("non-finite parameter");
  }
  if (!feature_names.empty() && feature_names.size() != input_dim()) {
    fail("feature name count differs from input dim");
  }
  if (!scaler.empty() &&
      (scaler.mean.size() != input_dim() || scaler.stddev.size() != input_dim())) {
    fail("scaler size differs from input dim");
  }
}

MlpModel init_model(const std::vector<int>& layer_dims, const std::vector<Activation>& activations,
                    const std::vector<double>& dropout_rates, std::uint64_t seed) {
  MlpModel m;
  m.layer_dims = layer_dims;
  m.activations = activations;
  m.dropout_rates = dropout_rates;
  for (int d : layer_dims) {
    if (d <= 0) throw ValidationError("mlp: layer dims must be positive");
  }
  if (layer_dims.size() < 2) throw ValidationError("mlp: need at least input and output dims");

  Rng rng(mix_seed(seed, 0x1417));
  const std::size_t n_layers = layer_dims.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const bool relu = l < activations.size() && activations[l] == Activation::relu;
    Eigen::MatrixXd w(fan_out, fan_in);
    if (relu) {
      const double sd = std::sqrt(2.0 / fan_in);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.normal(0.0, sd);
    } else {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  m.validate();
  return m;
}

MlpModel init_default_model(std::uint64_t seed) {
  auto m = init_model({static_cast<int>(kFeatureCount), 35, 20, 35, 1},
                      {Activation::relu, Activation::relu, Activation::relu}, {0.25, 0.15, 0.3},
                      seed);
  m.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  return m;
}

Eigen::RowVectorXd forward(const MlpModel& model, const Eigen::MatrixXd& batch, ForwardMode mode,
                           Rng* rng, ForwardCache* cache) {
  if (batch.rows() != static_cast<Eigen::Index>(model.input_dim())) {
    throw ValidationError("mlp: input has " + std::to_string(batch.rows()) +
                          " features, model expects " + std::to_string(model.input_dim()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->masks.clear();
  }
  Eigen::MatrixXd a = batch;
  const std::size_t n_layers = model.layer_count();
  for (std::size_t l = 0; l < n_layers; ++l) {
    // Each column gets its own dot products, so a sample's output does not
    // depend on the batch it is in.
    Eigen::MatrixXd z = model.weights[l].lazyProduct(a);
    z.colwise() += model.biases[l];
    if (cache) {
      cache->inputs.push_back(a);
      cache->preacts.push_back(z);
    }
    if (l + 1 == n_layers) {
      Eigen::RowVectorXd out = z.row(0).unaryExpr(&sigmoid);
      if (cache) cache->output = out;
      return out;
    }
    a = activate(z, model.activations[l]);
    const double rate = model.dropout_rates[l];
    if (mode == ForwardMode::train && rate > 0.0) {
      if (!rng) throw std::invalid_argument("train-mode dropout needs a random source");
      const double keep_scale = 1.0 / (1.0 - rate);
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (Eigen::Index j = 0; j < mask.cols(); ++j)
        for (Eigen::Index i = 0; i < mask.rows(); ++i)
          mask(i, j) = rng->uniform() < rate ? 0.0 : keep_scale;
      a = a.cwiseProduct(mask);
      if (cache) cache->masks.push_back(std::move(mask));
    } else if (cache) {
      cache->masks.emplace_back();  // empty: no mask applied
    }
  }
  return {};  // unreachable: validated models have an output layer
}

double bce_loss(std::span<const double> probabilities, std::span<const double> labels) {
  if (probabilities.size() != labels.size()) {
    throw ValidationError("bce_loss: " + std::to_string(probabilities.size()) +
                          " probabilities vs " + std::to_string(labels.size()) + " labels");
  }
  if (probabilities.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kBceEpsilon, 1.0 - kBceEpsilon);
    const double y = labels[i];
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probabilities.size());
}

Gradients backward(const MlpModel& model, const ForwardCache& cache,
                   std::span<const double> labels) {
  const std::size_t n_layers = model.layer_count();
  const auto batch = static_cast<std::size_t>(cache.output.size());
  if (cache.inputs.size() != n_layers || cache.preacts.size() != n_layers ||
      cache.masks.size() + 1 != n_layers) {
    throw ValidationError("backward: cache does not belong to this model");
  }
  if (labels.size() != batch || batch == 0) {
    throw ValidationError("backward: " + std::to_string(labels.size()) + " labels for a batch of " +
                          std::to_string(batch));
  }
  Gradients g;
  g.weights.resize(n_layers);
  g.biases.resize(n_layers);

  Eigen::MatrixXd delta(1, static_cast<Eigen::Index>(batch));
  for (std::size_t i = 0; i < batch; ++i) {
    delta(0, static_cast<Eigen::Index>(i)) =
        (cache.output(static_cast<Eigen::Index>(i)) - labels[i]) / static_cast<double>(batch);
  }
  for (std::size_t l = n_layers; l-- > 0;) {
    g.weights[l] = delta * cache.inputs[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = model.weights[l].transpose() * delta;
    const auto& mask = cache.masks[l - 1];
    if (mask.size() > 0) upstream = upstream.cwiseProduct(mask);
    delta = upstream.cwiseProduct(activation_derivative(cache.preacts[l - 1], model.activations[l - 1]));
  }
  return g;
}

AdamState AdamState::zeros_like(const MlpModel& model) {
  AdamState s;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    s.v_w.push_back(s.m_w.back());
    s.m_b.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    s.v_b.push_back(s.m_b.back());
  }
  return s;
}

namespace {

template <typename Param>
void adam_update(Param& theta, Param& m, Param& v, const Param& g, double lr, const AdamConfig& c,
                 double bias1, double bias2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  theta.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + c.epsilon);
}

}  // namespace

void adam_step(MlpModel& model, AdamState& state, const Gradients& grads, double learning_rate,
               const AdamConfig& adam) {
  const std::size_t n = model.layer_count();
  if (state.m_w.size() != n || grads.weights.size() != n || grads.biases.size() != n) {
    throw ValidationError("adam_step: state or gradients do not match the model");
  }
  for (std::size_t l = 0; l < n; ++l) {
    if (grads.weights[l].rows() != model.weights[l].rows() ||
        grads.weights[l].cols() != model.weights[l].cols() ||
        grads.biases[l].size() != model.biases[l].size() ||
        state.m_w[l].size() != model.weights[l].size() ||
        state.m_b[l].size() != model.biases[l].size()) {
      throw ValidationError("adam_step: shape mismatch at layer " + std::to_string(l));
    }
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < n; ++l) {
    adam_update(model.weights[l], state.m_w[l], state.v_w[l], grads.weights[l], learning_rate, adam,
                bias1, bias2);
    adam_update(model.biases[l], state.m_b[l], state.v_b[l], grads.biases[l], learning_rate, adam,
                bias1, bias2);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("train: learning_rate must be > 0");
  }
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
  if (patience && *patience < 1) throw ValidationError("train: patience must be >= 1");
}

double TrainHistory::best_validation_auc() const {
  for (const auto& e : epochs) {
    if (e.epoch == selected_epoch) return e.validation_auc;
  }
  return 0.0;
}

Eigen::MatrixXd to_matrix(const std::vector<FeatureVector>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.front().size()),
                    static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows.front().size()) {
      throw ValidationError("feature vectors have inconsistent length");
    }
    for (std::size_t i = 0; i < rows[j].size(); ++i) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
    }
  }
  return x;
}

namespace {

Eigen::MatrixXd sample_matrix(const std::vector<LabeledSample>& samples) {
  std::vector<FeatureVector> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.features);
  return to_matrix(rows);
}

std::vector<double> label_vector(const std::vector<LabeledSample>& samples) {
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(s.label ? 1.0 : 0.0);
  return y;
}

// Clamps into the open interval (0, 1).
double open_unit(double p) {
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

}  // namespace

TrainResult train(MlpModel model, const DatasetSplit& split, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (split.train.empty()) throw ValidationError("train: empty training set");
  if (split.validation.empty()) throw ValidationError("train: empty validation set");

  const Eigen::MatrixXd x_train = sample_matrix(split.train);
  const std::vector<double> y_train = label_vector(split.train);
  const Eigen::MatrixXd x_val = sample_matrix(split.validation);
  std::vector<bool> y_val_bool;
  for (const auto& s : split.validation) y_val_bool.push_back(s.label);
  const std::vector<double> y_val = label_vector(split.validation);
  if (std::find(y_val_bool.begin(), y_val_bool.end(), true) == y_val_bool.end() ||
      std::find(y_val_bool.begin(), y_val_bool.end(), false) == y_val_bool.end()) {
    throw ValidationError("train: validation set needs both classes");
  }

  Rng shuffle_rng(mix_seed(config.seed, 1));
  Rng dropout_rng(mix_seed(config.seed, 2));
  AdamState adam = AdamState::zeros_like(model);

  const std::size_t n = split.train.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  MlpModel best = model;
  double best_auc = -1.0;
  int best_epoch = 0;
  ForwardCache cache;
  Eigen::MatrixXd batch;
  std::vector<double> y_batch;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<Eigen::Index>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      batch.resize(x_train.rows(), static_cast<Eigen::Index>(len));
      y_batch.resize(len);
      for (std::size_t k = 0; k < len; ++k) {
        batch.col(static_cast<Eigen::Index>(k)) = x_train.col(order[start + k]);
        y_batch[k] = y_train[static_cast<std::size_t>(order[start + k])];
      }
      const Eigen::RowVectorXd p = forward(model, batch, ForwardMode::train, &dropout_rng, &cache);
      loss_sum += bce_loss(std::span<const double>(p.data(), len), y_batch) *
                  static_cast<double>(len);
      adam_step(model, adam, backward(model, cache, y_batch), config.learning_rate, config.adam);
    }

    const Eigen::RowVectorXd p_val = forward(model, x_val, ForwardMode::inference);
    std::vector<double> val_scores(p_val.data(), p_val.data() + p_val.size());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.validation_loss = bce_loss(val_scores, y_val);
    rec.validation_auc = auc_roc(make_scored(std::move(val_scores), y_val_bool));
    result.history.epochs.push_back(rec);

    if (rec.validation_auc > best_auc) {
      best_auc = rec.validation_auc;
      best_epoch = epoch;
      best.weights = model.weights;
      best.biases = model.biases;
    } else if (config.patience && epoch - best_epoch >= *config.patience) {
      break;
    }
  }
  result.history.selected_epoch = best_epoch;
  best.scaler = split.scaler;
  result.model = std::move(best);
  return result;
}

std::vector<double> predict_standardized(const MlpModel& model,
                                         const std::vector<FeatureVector>& features) {
  if (features.empty()) return {};
  for (const auto& x : features) {
    if (x.size() != model.input_dim()) {
      throw ValidationError("predict: feature vector has " + std::to_string(x.size()) +
                            " values, model expects " + std::to_string(model.input_dim()));
    }
  }
  const Eigen::RowVectorXd p = forward(model, to_matrix(features), ForwardMode::inference);
  std::vector<double> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = open_unit(p(i));
  return out;
}

std::vector<double> predict(const MlpModel& model, const Scaler& scaler,
                            const std::vector<FeatureVector>& features) {
  if (scaler.empty()) return predict_standardized(model, features);
  if (scaler.mean.size() != model.input_dim()) {
    throw ValidationError("predict: scaler does not match the model input");
  }
  std::vector<FeatureVector> scaled;
  scaled.reserve(features.size());
  for (const auto& x : features) {
    if (x.size() != model.input_dim()) {
      throw ValidationError("predict: feature vector has " + std::to_string(x.size()) +
                            " values, model expects " + std::to_string(model.input_dim()));
    }
    scaled.push_back(scaler.transform(x));
  }
  return predict_standardized(model, scaled);
}

std::vector<double> predict(const MlpModel& model, const std::vector<FeatureVector>& features) {
  return predict(model, model.scaler, features);
}

std::vector<double> predict(const MlpModel& model, std::string_view schema_version,
                            const std::vector<FeatureVector>& features) {
  if (schema_version != model.feature_schema_version) {
    throw ValidationError("predict: features use schema " + std::string(schema_version) +
                          ", model was trained on " + model.feature_schema_version);
  }
  return predict(model, model.scaler, features);
}

// ---- search ----------------------------------------------------------------

Candidate sample_candidate(const SearchSpace& space, Rng& rng) {
  Candidate c;
  const int layers = rng.between(space.min_hidden_layers, space.max_hidden_layers);
  for (int l = 0; l < layers; ++l) c.hidden.push_back(rng.between(space.min_neurons, space.max_neurons));
  c.activation = space.activations[rng.below(space.activations.size())];
  for (int l = 0; l < layers; ++l) c.dropout_rates.push_back(rng.uniform() * space.max_dropout);
  return c;
}

SearchResult random_search(const SearchSpace& space, const DatasetSplit& split,
                           const TrainConfig& base) {
  if (space.budget < 1) throw ValidationError("search: budget must be >= 1");
  if (space.min_hidden_layers < 1 || space.min_hidden_layers > space.max_hidden_layers ||
      space.min_neurons < 1 || space.min_neurons > space.max_neurons || space.activations.empty() ||
      !(space.max_dropout >= 0.0 && space.max_dropout <= kMaxDropout)) {
    throw ValidationError("search: invalid search space");
  }
  if (split.train.empty()) throw ValidationError("search: empty training set");
  const int input = static_cast<int>(split.train.front().features.size());

  Rng rng(mix_seed(space.seed, 0x5ea4));
  SearchResult result;
  std::vector<MlpModel> models;
  for (int trial = 0; trial < space.budget; ++trial) {
    Candidate c = sample_candidate(space, rng);
    std::vector<int> dims{input};
    dims.insert(dims.end(), c.hidden.begin(), c.hidden.end());
    dims.push_back(1);
    MlpModel init = init_model(dims, std::vector<Activation>(c.hidden.size(), c.activation),
                               c.dropout_rates, mix_seed(space.seed, static_cast<std::uint64_t>(trial)));
    if (input == static_cast<int>(kFeatureCount)) {
      init.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    }
    TrainConfig cfg = base;
    cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(trial));
    auto trained = train(std::move(init), split, cfg);
    result.leaderboard.push_back({trial, std::move(c), trained.history.best_validation_auc(),
                                  trained.history.selected_epoch});
    models.push_back(std::move(trained.model));
  }
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                     return a.validation_auc > b.validation_auc;
                   });
  result.best = models[static_cast<std::size_t>(result.leaderboard.front().trial)];
  return result;
}

// ---- model file --------------------------------------------------------------

void save_model(std::ostream& out, const MlpModel& model, const ModelProvenance& provenance) {
  model.validate();
  nlohmann::ordered_json j;
  j["format"] = "hfrisk-mlp";
  j["format_version"] = kModelFormatVersion;
  j["feature_schema_version"] = model.feature_schema_version;
  j["feature_names"] = model.feature_names;
  j["layer_dims"] = model.layer_dims;
  auto acts = nlohmann::ordered_json::array();
  for (auto a : model.activations) acts.push_back(std::string(to_string(a)));
  j["activations"] = acts;
  j["output_activation"] = "sigmoid";
  j["dropout_rates"] = model.dropout_rates;
  j["scaler"] = {{"mean", model.scaler.mean}, {"std", model.scaler.stddev}};
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const auto& w = model.weights[l];
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
    std::vector<double> b(model.biases[l].data(), model.biases[l].data() + model.biases[l].size());
    layers.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"weights", row_major}, {"biases", b}});
  }
  j["layers"] = layers;
  auto prov = nlohmann::ordered_json::object();
  if (provenance.split_seed) prov["split_seed"] = *provenance.split_seed;
  if (provenance.label_horizon_days) prov["label_horizon_days"] = *provenance.label_horizon_days;
  j["provenance"] = prov;
  out << j.dump(1) << '\n';
}

MlpModel load_model(std::istream& in, ModelProvenance* provenance) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
  try {
    if (j.at("format") != "hfrisk-mlp") throw ValidationError("model file: unknown format");
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw ValidationError("model file: unsupported format_version");
    }
    MlpModel m;
    m.feature_schema_version = j.at("feature_schema_version").get<std::string>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    for (const auto& a : j.at("activations")) {
      auto act = parse_activation(a.get<std::string>());
      if (!act) throw ValidationError("model file: unknown activation");
      m.activations.push_back(*act);
    }
    m.dropout_rates = j.at("dropout_rates").get<std::vector<double>>();
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.stddev = j.at("scaler").at("std").get<std::vector<double>>();
    for (const auto& layer : j.at("layers")) {
      const auto rows = layer.at("rows").get<Eigen::Index>();
      const auto cols = layer.at("cols").get<Eigen::Index>();
      const auto w = layer.at("weights").get<std::vector<double>>();
      const auto b = layer.at("biases").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
        throw ValidationError("model file: layer size mismatch");
      }
      Eigen::MatrixXd wm(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) wm(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      m.weights.push_back(std::move(wm));
      m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
    }
    if (provenance) {
      *provenance = {};
      if (auto p = j.find("provenance"); p != j.end()) {
        if (p->contains("split_seed")) provenance->split_seed = p->at("split_seed").get<std::uint64_t>();
        if (p->contains("label_horizon_days")) {
          provenance->label_horizon_days = p->at("label_horizon_days").get<int>();
        }
      }
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_model_file(const std::filesystem::path& path, const MlpModel& model,
                     const ModelProvenance& provenance) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(out, model, provenance);
}

MlpModel load_model_file(const std::filesystem::path& path, ModelProvenance* provenance) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_model(in, provenance);
}

}  // namespace hfrisk
