#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <cmath>
#include <cstddef>
#include <vector>

#include "hfrisk/mlp.hpp"
#include "hfrisk/random.hpp"

namespace oracle {

/// P(s+ > s-) + 0.5 P(s+ = s-) by enumerating every positive/negative pair.
inline double pair_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Step-wise PR area from confusion counts at every distinct threshold.
inline double step_aucpr(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double n_pos = 0;
  for (bool l : labels) n_pos += l;
  double area = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) (labels[i] ? tp : fp) += 1;
    }
    const double recall = tp / n_pos;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 1.0;
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

/// Mean BCE of a train-mode forward pass under fixed masks, evaluated
/// straight from the definition (no Eigen products).
inline double loss_with_masks(const hfrisk::MlpModel& m, const Eigen::MatrixXd& x,
                              const std::vector<double>& y,
                              const std::vector<Eigen::MatrixXd>& masks) {
  const auto n = x.cols();
  double total = 0.0;
  for (Eigen::Index s = 0; s < n; ++s) {
    std::vector<double> a(x.col(s).data(), x.col(s).data() + x.rows());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const auto& w = m.weights[l];
      std::vector<double> z(static_cast<std::size_t>(w.rows()));
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double acc = m.biases[l](i);
        for (Eigen::Index k = 0; k < w.cols(); ++k) acc += w(i, k) * a[static_cast<std::size_t>(k)];
        z[static_cast<std::size_t>(i)] = acc;
      }
      if (l + 1 == m.weights.size()) {
        const double p = 1.0 / (1.0 + std::exp(-z[0]));
        const double yy = y[static_cast<std::size_t>(s)];
        total += -(yy * std::log(p) + (1 - yy) * std::log(1 - p));
        break;
      }
      for (std::size_t i = 0; i < z.size(); ++i) {
        double v = z[i];
        switch (m.activations[l]) {
          case hfrisk::Activation::relu: v = v > 0 ? v : 0; break;
          case hfrisk::Activation::sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
          case hfrisk::Activation::linear: break;
        }
        if (masks[l].size() > 0) v *= masks[l](static_cast<Eigen::Index>(i), s);
        z[i] = v;
      }
      a = z;
    }
  }
  return total / static_cast<double>(n);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t parameters = 0;
};

/// Central differences (step h) against backward() for every parameter.
/// Relative error uses max(|a|, |n|, 1e-7) as the scale; relu kinks are
/// avoided by the caller's choice of inputs.
inline GradCheck check_gradients(hfrisk::MlpModel m, const Eigen::MatrixXd& x, const std::vector<double>& y,
                                 std::uint64_t seed, double h = 1e-5) {
  hfrisk::Rng rng(seed);
  hfrisk::ForwardCache cache;
  hfrisk::forward(m, x, hfrisk::ForwardMode::train, &rng, &cache);
  const auto grads = hfrisk::backward(m, cache, y);
  std::vector<Eigen::MatrixXd> masks = cache.masks;

  GradCheck out;
  auto compare = [&](double analytic, double& param) {
    const double saved = param;
    param = saved + h;
    const double up = loss_with_masks(m, x, y, masks);
    param = saved - h;
    const double down = loss_with_masks(m, x, y, masks);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / scale);
    ++out.parameters;
  };
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i)
      for (Eigen::Index k = 0; k < m.weights[l].cols(); ++k) compare(grads.weights[l](i, k), m.weights[l](i, k));
    for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) compare(grads.biases[l](i), m.biases[l](i));
  }
  return out;
}

}  // namespace oracle
