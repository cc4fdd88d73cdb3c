#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hfrisk/date.hpp"
#include "hfrisk/features.hpp"
#include "hfrisk/pipeline.hpp"

namespace hfrisk {

struct MlpModel;

/// Scores paired with binary labels. `patient_ids`/`dates` are optional
/// provenance and either empty or the same length as `scores`.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<bool> labels;
  std::vector<std::string> patient_ids;
  std::vector<Date> dates;

  std::size_t size() const { return scores.size(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }
};

ScoredSet make_scored(std::vector<double> scores, std::vector<bool> labels);
/// Attaches provenance from the samples the scores were computed on.
ScoredSet make_scored(std::vector<double> scores, const std::vector<LabeledSample>& samples);

inline constexpr double kStartThreshold = std::numeric_limits<double>::infinity();

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

struct PrPoint {
  double recall;
  double precision;
  double threshold;
};

/// Sweep over distinct scores, descending; positive iff score >= threshold.
/// Starts at (0, 0) with threshold +inf; the last point is (1, 1).
std::vector<RocPoint> roc_curve(const ScoredSet& scored);
/// Trapezoidal area under roc_curve().
double auc_roc(const ScoredSet& scored);

/// Same sweep without a start point; precision is 1 when nothing is
/// predicted positive.
std::vector<PrPoint> pr_curve(const ScoredSet& scored);
/// Step-wise area: sum of (r_i - r_{i-1}) * p_i with r_0 = 0.
double auc_pr(const ScoredSet& scored);

struct ScoreHistogram {
  std::vector<double> bin_edges;  // n_bins + 1 edges on [0, 1]
  std::vector<std::size_t> negative;
  std::vector<std::size_t> positive;
};

/// Equal-width bins on [0, 1]; the last bin is closed on the right. Scores
/// outside [0, 1] fall into the nearest edge bin.
ScoreHistogram score_histograms(const ScoredSet& scored, std::size_t n_bins = 20);

struct MetricsReport {
  std::vector<RocPoint> roc;
  double aucroc = 0.0;
  std::vector<PrPoint> pr;
  double aucpr = 0.0;
  ScoreHistogram histogram;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  /// Hash of the label sequence; compare() refuses reports on other labels.
  std::uint64_t label_digest = 0;
};

MetricsReport evaluate_scores(const ScoredSet& scored, std::size_t n_bins = 20);

/// Highest TPR among ROC points with FPR <= 1 - specificity.
double sensitivity_at_specificity(const std::vector<RocPoint>& roc, double specificity);

struct OperatingPointDelta {
  double specificity;
  double sensitivity_a;
  double sensitivity_b;
  double delta;
};

struct ComparisonReport {
  double aucroc_a = 0.0, aucroc_b = 0.0, delta_aucroc = 0.0;
  double aucpr_a = 0.0, aucpr_b = 0.0, delta_aucpr = 0.0;
  std::vector<OperatingPointDelta> operating_points;
};

inline constexpr std::array<double, 3> kComparisonSpecificities = {0.7, 0.8, 0.9};

/// Deltas are a - b.
ComparisonReport compare(const MetricsReport& a, const MetricsReport& b);

/// Mean AUCROC drop when one column is shuffled, per feature (schema order).
/// Each feature's shuffles come from a stream keyed on its name, so the
/// result for a feature does not depend on column position.
std::vector<double> permutation_importance(const MlpModel& model, const Scaler& scaler,
                                           const std::vector<LabeledSample>& samples,
                                           int n_repeats = 10, std::uint64_t seed = 1);

/// Raw per-repeat drops, [feature][repeat].
std::vector<std::vector<double>> permutation_importance_repeats(
    const MlpModel& model, const Scaler& scaler, const std::vector<LabeledSample>& samples,
    int n_repeats, std::uint64_t seed);

// ---- export -------------------------------------------------------------

/// roc.csv, pr.csv, histogram.csv and summary.csv under `dir`.
void write_report_dir(const std::filesystem::path& dir, const MetricsReport& report);
void write_comparison(const std::filesystem::path& file, const ComparisonReport& comparison,
                      std::string_view name_a, std::string_view name_b);

}  // namespace hfrisk
