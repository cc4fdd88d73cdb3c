#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "hfrisk/error.hpp"
#include "hfrisk/metrics.hpp"
#include "hfrisk/mlp.hpp"
#include "hfrisk/random.hpp"

using namespace hfrisk;

namespace {

ScoredSet four_sample() { return make_scored({0.8, 0.6, 0.4, 0.2}, {true, false, true, false}); }

bool has_point(const std::vector<RocPoint>& roc, double fpr, double tpr) {
  return std::any_of(roc.begin(), roc.end(), [&](const RocPoint& p) {
    return std::abs(p.fpr - fpr) < 1e-12 && std::abs(p.tpr - tpr) < 1e-12;
  });
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

/// Random scored set with ties from a coarse score grid.
ScoredSet random_set(Rng& rng) {
  const std::size_t n = 2 + rng.below(199);
  std::vector<double> scores(n);
  std::vector<bool> labels(n);
  const int grid = 1 + static_cast<int>(rng.below(30));
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(rng.below(static_cast<std::uint64_t>(grid))) / grid;
    labels[i] = rng.bernoulli(0.3);
  }
  labels[0] = true;
  labels[1] = false;
  return make_scored(scores, labels);
}

}  // namespace

TEST_CASE("roc_curve examples") {
  const auto perfect = roc_curve(make_scored({0.9, 0.8, 0.2, 0.1}, {true, true, false, false}));
  CHECK(has_point(perfect, 0, 0));
  CHECK(has_point(perfect, 0, 1));
  CHECK(has_point(perfect, 1, 1));
  CHECK(std::isinf(perfect.front().threshold));

  const auto flat = roc_curve(make_scored({0.3, 0.3, 0.3}, {true, false, false}));
  REQUIRE(flat.size() == 2);
  CHECK(flat[0].fpr == 0);
  CHECK(flat[0].tpr == 0);
  CHECK(flat[1].fpr == 1);
  CHECK(flat[1].tpr == 1);

  const auto roc = roc_curve(four_sample());
  CHECK(has_point(roc, 0, 0.5));
  CHECK(has_point(roc, 0.5, 1.0));
  REQUIRE(roc.size() == 5);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].fpr >= roc[i - 1].fpr);
    CHECK(roc[i].tpr >= roc[i - 1].tpr);
    CHECK(roc[i].threshold < roc[i - 1].threshold);
  }
  CHECK(roc.back().threshold == 0.2);

  CHECK_THROWS_AS(roc_curve(make_scored({0.1, 0.2}, {true, true})), ValidationError);
  CHECK_THROWS_AS(auc_roc(make_scored({0.1, 0.2}, {false, false})), ValidationError);
  CHECK_THROWS_AS(make_scored({0.1}, {true, false}), ValidationError);
}

TEST_CASE("auc_roc examples") {
  CHECK(auc_roc(make_scored({0.9, 0.8, 0.2, 0.1}, {true, true, false, false})) == 1.0);
  CHECK(auc_roc(make_scored({0.5, 0.5, 0.5, 0.5}, {true, false, false, true})) == 0.5);
  CHECK(auc_roc(four_sample()) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(auc_roc(make_scored({0.1, 0.9}, {true, false})) == 0.0);
}

TEST_CASE("pr_curve and auc_pr examples") {
  CHECK(auc_pr(make_scored({0.9, 0.8, 0.2, 0.1}, {true, true, false, false})) == 1.0);
  CHECK(auc_pr(make_scored({0.4, 0.4, 0.4, 0.4}, {true, false, false, false})) == doctest::Approx(0.25));

  const auto pr = pr_curve(four_sample());
  REQUIRE(pr.size() == 4);
  const double expect[4][2] = {{0.5, 1.0}, {0.5, 0.5}, {1.0, 2.0 / 3.0}, {1.0, 0.5}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(pr[i].recall == doctest::Approx(expect[i][0]));
    CHECK(pr[i].precision == doctest::Approx(expect[i][1]));
  }
  CHECK(std::abs(auc_pr(four_sample()) - 5.0 / 6.0) < 1e-9);
  CHECK_THROWS_AS(pr_curve(make_scored({0.1, 0.2}, {false, false})), ValidationError);
}

TEST_CASE("auc_roc equals the pair statistic on random sets") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_set(rng);
    CHECK(std::abs(auc_roc(s) - oracle::pair_auc(s.scores, s.labels)) <= 1e-12);
    CHECK(std::abs(auc_pr(s) - oracle::step_aucpr(s.scores, s.labels)) <= 1e-12);
  }
}

TEST_CASE("label flip symmetry and monotone invariance") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_set(rng);
    std::vector<double> neg;
    std::vector<bool> flipped;
    std::vector<double> warped;
    for (std::size_t i = 0; i < s.size(); ++i) {
      neg.push_back(-s.scores[i]);
      flipped.push_back(!s.labels[i]);
      warped.push_back(std::exp(3.0 * s.scores[i]) + 1.0);
    }
    CHECK(std::abs(auc_roc(make_scored(neg, flipped)) - auc_roc(s)) <= 1e-12);
    const auto w = make_scored(warped, s.labels);
    CHECK(auc_roc(w) == auc_roc(s));
    const auto a = roc_curve(s);
    const auto b = roc_curve(w);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].fpr == b[i].fpr);
      CHECK(a[i].tpr == b[i].tpr);
    }
  }
}

TEST_CASE("random scores give AUC near one half") {
  Rng rng(99);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (int i = 0; i < 10000; ++i) {
    scores.push_back(rng.uniform());
    labels.push_back(i % 2 == 0);
  }
  const double auc = auc_roc(make_scored(scores, labels));
  CHECK(auc >= 0.47);
  CHECK(auc <= 0.53);
}

TEST_CASE("score_histograms") {
  const auto h = score_histograms(make_scored({0.0, 1.0}, {false, true}), 2);
  CHECK(h.negative == std::vector<std::size_t>{1, 0});
  CHECK(h.positive == std::vector<std::size_t>{0, 1});
  CHECK(h.bin_edges == std::vector<double>{0.0, 0.5, 1.0});

  Rng rng(3);
  const auto s = random_set(rng);
  const auto r = score_histograms(s);
  CHECK(r.negative.size() == 20);
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    pos += r.positive[i];
    neg += r.negative[i];
  }
  CHECK(pos == s.positives());
  CHECK(neg == s.negatives());
  CHECK_THROWS_AS(score_histograms(s, 0), ValidationError);
}

TEST_CASE("compare") {
  MetricsReport a, b;
  a.aucroc = 0.84;
  b.aucroc = 0.73;
  const auto c = compare(a, b);
  CHECK(c.delta_aucroc == doctest::Approx(0.11));
  CHECK(c.operating_points.size() == 3);

  Rng rng(5);
  const auto s = random_set(rng);
  std::vector<double> other;
  for (std::size_t i = 0; i < s.size(); ++i) other.push_back(rng.uniform());
  const auto x = evaluate_scores(s);
  const auto y = evaluate_scores(make_scored(other, s.labels));
  const auto same = compare(x, x);
  CHECK(same.delta_aucroc == 0.0);
  CHECK(same.delta_aucpr == 0.0);
  for (const auto& op : same.operating_points) CHECK(op.delta == 0.0);
  const auto xy = compare(x, y);
  const auto yx = compare(y, x);
  CHECK(xy.delta_aucroc == -yx.delta_aucroc);
  CHECK(xy.delta_aucpr == -yx.delta_aucpr);
  for (std::size_t i = 0; i < 3; ++i) CHECK(xy.operating_points[i].delta == -yx.operating_points[i].delta);

  auto flipped = s.labels;
  flipped[0] = !flipped[0];
  flipped[1] = !flipped[1];
  CHECK_THROWS_AS(compare(x, evaluate_scores(make_scored(s.scores, flipped))), ValidationError);
}

TEST_CASE("sensitivity_at_specificity") {
  const auto roc = roc_curve(four_sample());
  CHECK(sensitivity_at_specificity(roc, 1.0) == 0.5);
  CHECK(sensitivity_at_specificity(roc, 0.5) == 1.0);
}

TEST_CASE("permutation importance") {
  const auto split = fixture::separable_split(6, 31);
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.max_epochs = 30;
  cfg.seed = 2;
  auto m0 = init_model({6, 8, 1}, {Activation::relu}, {0.0}, 4);
  auto model = train(m0, split, cfg).model;
  model.feature_names = {"signal", "n1", "n2", "n3", "n4", "n5"};

  SUBCASE("the informative feature ranks first in every repeat") {
    const auto reps = permutation_importance_repeats(model, {}, split.test, 10, 1);
    REQUIRE(reps.size() == 6);
    for (int r = 0; r < 10; ++r) {
      for (std::size_t f = 1; f < 6; ++f) CHECK(reps[0][r] > reps[f][r]);
    }
    const auto mean = permutation_importance(model, {}, split.test, 10, 1);
    CHECK(std::max_element(mean.begin(), mean.end()) - mean.begin() == 0);
  }
  SUBCASE("a feature the model ignores has zero importance") {
    auto ignoring = model;
    ignoring.weights[0].col(3).setZero();
    const auto reps = permutation_importance_repeats(ignoring, {}, split.test, 5, 1);
    for (double d : reps[3]) CHECK(d == 0.0);
  }
  SUBCASE("importance follows the feature, not its column") {
    auto swapped = model;
    swapped.weights[0].col(1).swap(swapped.weights[0].col(4));
    std::swap(swapped.feature_names[1], swapped.feature_names[4]);
    auto samples = split.test;
    for (auto& s : samples) std::swap(s.features[1], s.features[4]);
    const auto a = permutation_importance(model, {}, split.test, 4, 9);
    const auto b = permutation_importance(swapped, {}, samples, 4, 9);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[4]);
    CHECK(a[4] == b[1]);
  }
  SUBCASE("histogram mass above one half separates the classes") {
    std::vector<FeatureVector> rows;
    for (const auto& s : split.test) rows.push_back(s.features);
    const auto h = score_histograms(make_scored(predict(model, rows), split.test), 2);
    CHECK(h.positive[1] > h.negative[1]);
  }
  auto single = split.test;
  for (auto& s : single) s.label = true;
  CHECK_THROWS_AS(permutation_importance(model, {}, single), ValidationError);
}

TEST_CASE("report export headers") {
  const auto dir = std::filesystem::temp_directory_path() / "hfrisk_metrics_export";
  std::filesystem::remove_all(dir);
  const auto report = evaluate_scores(four_sample());
  CHECK(report.n_pos == 2);
  CHECK(report.n_neg == 2);
  write_report_dir(dir, report);
  CHECK(first_line(dir / "roc.csv") == "fpr,tpr,threshold");
  CHECK(first_line(dir / "pr.csv") == "recall,precision,threshold");
  CHECK(first_line(dir / "histogram.csv") == "bin_lo,bin_hi,neg_count,pos_count");
  CHECK(first_line(dir / "summary.csv") == "metric,value");
  write_comparison(dir / "comparison.csv", compare(report, report), "model", "rules");
  CHECK(first_line(dir / "comparison.csv") == "metric,model,rules,delta");
  std::filesystem::remove_all(dir);
}
