#include <doctest.h>

#include <cmath>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "hfrisk/error.hpp"
#include "hfrisk/metrics.hpp"
#include "hfrisk/mlp.hpp"
#include "hfrisk/random.hpp"

using namespace hfrisk;

namespace {

Eigen::MatrixXd random_batch(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = rng.normal();
  return x;
}

std::vector<double> random_labels(std::size_t n, Rng& rng) {
  std::vector<double> y(n);
  for (auto& v : y) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return y;
}

void zero_parameters(MlpModel& m) {
  for (auto& w : m.weights) w.setZero();
  for (auto& b : m.biases) b.setZero();
}

}  // namespace

TEST_CASE("init_model shapes, zero biases and determinism") {
  const auto m = init_model({22, 35, 20, 35, 1}, {Activation::relu, Activation::relu, Activation::relu},
                            {0.25, 0.15, 0.3}, 42);
  REQUIRE(m.layer_count() == 4);
  CHECK(m.weights[0].rows() == 35);
  CHECK(m.weights[0].cols() == 22);
  CHECK(m.weights[1].rows() == 20);
  CHECK(m.weights[1].cols() == 35);
  CHECK(m.weights[2].rows() == 35);
  CHECK(m.weights[2].cols() == 20);
  CHECK(m.weights[3].rows() == 1);
  CHECK(m.weights[3].cols() == 35);
  for (const auto& b : m.biases) CHECK(b.isZero(0.0));
  const auto again = init_model({22, 35, 20, 35, 1}, m.activations, m.dropout_rates, 42);
  for (std::size_t l = 0; l < 4; ++l) CHECK(m.weights[l] == again.weights[l]);
  CHECK(m.parameter_count() == 22 * 35 + 35 + 35 * 20 + 20 + 20 * 35 + 35 + 35 + 1);

  CHECK_THROWS_AS(init_model({22, 0, 1}, {Activation::relu}, {0.0}, 1), ValidationError);
  CHECK_THROWS_AS(init_model({22, 5, 1}, {Activation::relu}, {0.6}, 1), ValidationError);
  CHECK_THROWS_AS(init_model({22, 5, 1}, {}, {0.0}, 1), ValidationError);
}

TEST_CASE("init scales follow He and Glorot") {
  const auto relu = init_model({400, 300, 1}, {Activation::relu}, {0.0}, 3);
  const double var = relu.weights[0].array().square().mean();
  CHECK(var == doctest::Approx(2.0 / 400).epsilon(0.05));
  const auto sig = init_model({400, 300, 1}, {Activation::sigmoid}, {0.0}, 3);
  const double limit = std::sqrt(6.0 / 700.0);
  CHECK(sig.weights[0].cwiseAbs().maxCoeff() <= limit);
  CHECK(sig.weights[0].array().square().mean() == doctest::Approx(limit * limit / 3).epsilon(0.05));
}

TEST_CASE("forward examples") {
  Rng rng(1);
  auto m = init_model({4, 6, 1}, {Activation::relu}, {0.0}, 1);
  zero_parameters(m);
  const auto x = random_batch(4, 5, rng);
  const auto p = forward(m, x, ForwardMode::inference);
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == 0.5);

  auto single = init_model({1, 1}, {}, {}, 1);
  single.weights[0](0, 0) = 1.0;
  Eigen::MatrixXd in(1, 2);
  in << 0.0, 40.0;
  const auto q = forward(single, in, ForwardMode::inference);
  CHECK(q(0) == 0.5);
  CHECK(q(1) > 0.999999);

  CHECK_THROWS_AS(forward(m, random_batch(3, 2, rng), ForwardMode::inference), ValidationError);
}

TEST_CASE("dropout off: train mode equals inference mode") {
  Rng data(2);
  const auto m = init_model({6, 8, 5, 1}, {Activation::relu, Activation::sigmoid}, {0.0, 0.0}, 9);
  const auto x = random_batch(6, 32, data);
  Rng mask(3);
  const auto a = forward(m, x, ForwardMode::train, &mask);
  const auto b = forward(m, x, ForwardMode::inference);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("inverted dropout keeps the expected activation") {
  auto m = init_model({1, 2000, 1}, {Activation::linear}, {0.4}, 5);
  for (Eigen::Index i = 0; i < 2000; ++i) m.weights[0](i, 0) = 1.0;
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(1, 1);
  Rng rng(8);
  ForwardCache cache;
  forward(m, x, ForwardMode::train, &rng, &cache);
  const auto& mask = cache.masks[0];
  const double kept = (mask.array() > 0).cast<double>().mean();
  CHECK(kept == doctest::Approx(0.6).epsilon(0.05));
  CHECK(mask.maxCoeff() == doctest::Approx(1.0 / 0.6));
  CHECK(mask.mean() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("bce_loss values") {
  const std::vector<double> half{0.5}, one{1.0}, zero{0.0}, p09{0.9};
  CHECK(bce_loss(half, one) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(half, zero) == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(p09, zero) == doctest::Approx(-std::log(0.1)));
  CHECK(bce_loss(one, one) == doctest::Approx(0.0));
  CHECK(bce_loss(one, zero) == doctest::Approx(-std::log(kBceEpsilon)));
  CHECK_THROWS_AS(bce_loss(half, std::vector<double>{1.0, 0.0}), ValidationError);
}

TEST_CASE("backward matches central differences on a (5,4,3,1) network") {
  Rng rng(12);
  auto m = init_model({5, 4, 3, 1}, {Activation::sigmoid, Activation::linear}, {0.2, 0.0}, 4);
  for (auto& b : m.biases) b.setRandom();
  const auto x = random_batch(5, 8, rng);
  const auto y = random_labels(8, rng);
  const auto r = oracle::check_gradients(m, x, y, 99);
  CHECK(r.parameters == m.parameter_count());
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("backward structure") {
  Rng rng(4);
  auto m = init_model({3, 4, 1}, {Activation::sigmoid}, {0.0}, 2);
  for (auto& b : m.biases) b.setConstant(0.3);
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(3, 6);
  const std::vector<double> y{1, 0, 1, 1, 0, 1};
  ForwardCache cache;
  forward(m, zeros, ForwardMode::train, &rng, &cache);
  const auto g = backward(m, cache, y);
  CHECK(g.weights[0].isZero(0.0));
  CHECK(g.biases[1].norm() > 0);

  // Duplicated batch: same mean gradients.
  const auto x = random_batch(3, 5, rng);
  const std::vector<double> y5{1, 0, 0, 1, 1};
  Eigen::MatrixXd xx(3, 10);
  xx << x, x;
  std::vector<double> yy = y5;
  yy.insert(yy.end(), y5.begin(), y5.end());
  ForwardCache c1, c2;
  forward(m, x, ForwardMode::inference, nullptr, &c1);
  forward(m, xx, ForwardMode::inference, nullptr, &c2);
  const auto g1 = backward(m, c1, y5);
  const auto g2 = backward(m, c2, yy);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK((g1.weights[l] - g2.weights[l]).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((g1.biases[l] - g2.biases[l]).cwiseAbs().maxCoeff() < 1e-15);
  }
  CHECK_THROWS_AS(backward(m, c1, yy), ValidationError);
}

TEST_CASE("adam_step") {
  auto m = init_model({2, 3, 1}, {Activation::relu}, {0.0}, 1);
  const auto before = m;
  auto state = AdamState::zeros_like(m);
  Gradients ones{{}, {}};
  Gradients zeros{{}, {}};
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    ones.weights.push_back(Eigen::MatrixXd::Ones(m.weights[l].rows(), m.weights[l].cols()));
    ones.biases.push_back(Eigen::VectorXd::Ones(m.biases[l].size()));
    zeros.weights.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
    zeros.biases.push_back(Eigen::VectorXd::Zero(m.biases[l].size()));
  }
  SUBCASE("zero gradient from zero state") {
    adam_step(m, state, zeros, 0.001);
    for (std::size_t l = 0; l < m.layer_count(); ++l) CHECK(m.weights[l] == before.weights[l]);
  }
  SUBCASE("first step with unit gradient moves by the learning rate") {
    adam_step(m, state, ones, 0.001);
    CHECK(state.step == 1);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
      const Eigen::MatrixXd delta = m.weights[l] - before.weights[l];
      CHECK(delta.maxCoeff() == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
      CHECK(delta.minCoeff() == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
    }
  }
  SUBCASE("constant negative gradient moves parameters up twice") {
    Gradients neg = ones;
    for (auto& w : neg.weights) w *= -0.3;
    for (auto& b : neg.biases) b *= -0.3;
    adam_step(m, state, neg, 0.01);
    const auto mid = m;
    adam_step(m, state, neg, 0.01);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
      CHECK(((mid.weights[l] - before.weights[l]).array() > 0).all());
      CHECK(((m.weights[l] - mid.weights[l]).array() > 0).all());
    }
  }
  SUBCASE("shape mismatch") {
    Gradients bad = ones;
    bad.weights[0] = Eigen::MatrixXd::Ones(1, 1);
    CHECK_THROWS_AS(adam_step(m, state, bad, 0.001), ValidationError);
  }
}

TEST_CASE("train on a separable split") {
  const auto split = fixture::separable_split(6, 21);
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.max_epochs = 50;
  cfg.patience.reset();
  cfg.seed = 5;
  const auto m0 = init_model({6, 8, 4, 1}, {Activation::relu, Activation::relu}, {0.1, 0.0}, 3);
  const auto r = train(m0, split, cfg);
  CHECK(r.history.epochs.size() == 50);
  CHECK(r.history.best_validation_auc() >= 0.95);
  const auto& sel = r.history.epochs[static_cast<std::size_t>(r.history.selected_epoch - 1)];
  CHECK(sel.train_loss < r.history.epochs.front().train_loss);
  CHECK(sel.validation_auc == r.history.best_validation_auc());
  for (const auto& e : r.history.epochs) CHECK(e.validation_auc <= sel.validation_auc);

  std::vector<FeatureVector> rows;
  std::vector<bool> labels;
  for (const auto& s : split.test) {
    rows.push_back(s.features);
    labels.push_back(s.label);
  }
  const auto scores = predict(r.model, rows);
  for (double s : scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  CHECK(auc_roc(make_scored(scores, labels)) >= 0.95);

  const auto again = train(m0, split, cfg);
  for (std::size_t l = 0; l < again.model.layer_count(); ++l) CHECK(again.model.weights[l] == r.model.weights[l]);
  CHECK(again.history.selected_epoch == r.history.selected_epoch);

  TrainConfig one = cfg;
  one.max_epochs = 1;
  const auto r1 = train(m0, split, one);
  CHECK(r1.history.epochs.size() == 1);
  CHECK(r1.history.selected_epoch == 1);
}

TEST_CASE("train preconditions and early stopping") {
  auto split = fixture::separable_split(4, 2);
  const auto m0 = init_model({4, 3, 1}, {Activation::relu}, {0.0}, 1);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.batch_size = 32;
  cfg.patience = 3;
  const auto r = train(m0, split, cfg);
  CHECK(r.history.epochs.size() < 200);
  CHECK(static_cast<int>(r.history.epochs.size()) <= r.history.selected_epoch + 3);

  DatasetSplit empty = split;
  empty.validation.clear();
  CHECK_THROWS_AS(train(m0, empty, cfg), ValidationError);
  empty = split;
  empty.train.clear();
  CHECK_THROWS_AS(train(m0, empty, cfg), ValidationError);
  TrainConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(m0, split, bad), ValidationError);
  bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(m0, split, bad), ValidationError);
}

TEST_CASE("predict: zero model, purity, batch independence, schema check") {
  auto m = init_default_model(3);
  std::vector<FeatureVector> rows;
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    FeatureVector x(kFeatureCount);
    for (auto& v : x) v = rng.normal(40, 20);
    rows.push_back(x);
  }
  m.scaler.mean.assign(kFeatureCount, 40.0);
  m.scaler.stddev.assign(kFeatureCount, 20.0);
  const auto all = predict(m, rows);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(predict(m, {rows[i]})[0] == all[i]);
  std::vector<FeatureVector> reversed(rows.rbegin(), rows.rend());
  const auto rev = predict(m, reversed);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rev[rows.size() - 1 - i] == all[i]);

  auto zero = m;
  zero_parameters(zero);
  for (double s : predict(zero, rows)) CHECK(s == 0.5);

  CHECK_THROWS_AS(predict(m, "hf21.v0", rows), ValidationError);
  CHECK(predict(m, kFeatureSchemaVersion, rows) == all);
  CHECK_THROWS_AS(predict(m, {FeatureVector(3, 0.0)}), ValidationError);
}

TEST_CASE("model file round trip predicts identically") {
  auto m = init_model({22, 7, 5, 1}, {Activation::sigmoid, Activation::sigmoid}, {0.1, 0.2}, 8);
  for (auto& b : m.biases) b.setRandom();
  m.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  m.scaler.mean.assign(kFeatureCount, 1.0 / 3.0);
  m.scaler.stddev.assign(kFeatureCount, 0.7);
  std::ostringstream out;
  save_model(out, m, {5, 0});
  std::istringstream in(out.str());
  ModelProvenance prov;
  const auto back = load_model(in, &prov);
  CHECK(prov.split_seed.value() == 5);
  CHECK(prov.label_horizon_days.value() == 0);
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    CHECK(back.weights[l] == m.weights[l]);
    CHECK(back.biases[l] == m.biases[l]);
  }
  CHECK(back.scaler == m.scaler);
  Rng rng(1);
  std::vector<FeatureVector> rows(20, FeatureVector(kFeatureCount));
  for (auto& r : rows)
    for (auto& v : r) v = rng.normal();
  CHECK(predict(back, rows) == predict(m, rows));
  std::ostringstream again;
  save_model(again, back, prov);
  CHECK(again.str() == out.str());

  std::string broken = out.str();
  broken.replace(broken.find("hfrisk-mlp"), 10, "other-kind");
  std::istringstream bad(broken);
  CHECK_THROWS_AS(load_model(bad), ValidationError);
}

TEST_CASE("random_search samples inside the space and ranks by validation AUC") {
  SearchSpace space;
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto c = sample_candidate(space, rng);
    CHECK(c.hidden.size() >= 2);
    CHECK(c.hidden.size() <= 5);
    CHECK(c.dropout_rates.size() == c.hidden.size());
    for (int n : c.hidden) {
      CHECK(n >= 5);
      CHECK(n <= 150);
    }
    for (double r : c.dropout_rates) {
      CHECK(r >= 0.0);
      CHECK(r <= 0.5);
    }
  }
  const auto split = fixture::separable_split(5, 8);
  TrainConfig base;
  base.max_epochs = 3;
  base.batch_size = 128;
  space.budget = 3;
  space.max_neurons = 20;
  const auto r = random_search(space, split, base);
  REQUIRE(r.leaderboard.size() == 3);
  for (const auto& e : r.leaderboard) CHECK(r.leaderboard.front().validation_auc >= e.validation_auc);
  CHECK(r.best.layer_count() == r.leaderboard.front().candidate.hidden.size() + 1);
  space.budget = 1;
  CHECK(random_search(space, split, base).leaderboard.size() == 1);
  space.budget = 0;
  CHECK_THROWS_AS(random_search(space, split, base), ValidationError);
}
