#include "hfrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hfrisk/error.hpp"
#include "hfrisk/mlp.hpp"
#include "hfrisk/random.hpp"
#include "hfrisk/text.hpp"

namespace hfrisk {

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
}

ScoredSet make_scored(std::vector<double> scores, std::vector<bool> labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("scored set: " + std::to_string(scores.size()) + " scores vs " +
                          std::to_string(labels.size()) + " labels");
  }
  ScoredSet s;
  s.scores = std::move(scores);
  s.labels = std::move(labels);
  return s;
}

ScoredSet make_scored(std::vector<double> scores, const std::vector<LabeledSample>& samples) {
  std::vector<bool> labels;
  labels.reserve(samples.size());
  for (const auto& x : samples) labels.push_back(x.label);
  ScoredSet s = make_scored(std::move(scores), std::move(labels));
  for (const auto& x : samples) {
    s.patient_ids.push_back(x.patient_id);
    s.dates.push_back(x.date);
  }
  return s;
}

namespace {

// Cumulative confusion counts after each group of tied scores, descending.
struct SweepStep {
  std::size_t tp;
  std::size_t fp;
  double threshold;
};

std::vector<SweepStep> sweep(const ScoredSet& scored) {
  if (scored.scores.size() != scored.labels.size()) {
    throw ValidationError("scored set: scores and labels differ in length");
  }
  for (double s : scored.scores) {
    if (std::isnan(s)) throw ValidationError("scored set: NaN score");
  }
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored.scores[a] > scored.scores[b];
  });
  std::vector<SweepStep> steps;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scored.scores[order[k]];
    while (k < order.size() && scored.scores[order[k]] == threshold) {
      (scored.labels[order[k]] ? tp : fp) += 1;
      ++k;
    }
    steps.push_back({tp, fp, threshold});
  }
  return steps;
}

void require_both_classes(const ScoredSet& scored, const char* op) {
  const std::size_t pos = scored.positives();
  if (pos == 0 || pos == scored.size()) {
    throw ValidationError(std::string(op) + ": needs at least one positive and one negative");
  }
}

}  // namespace

std::vector<RocPoint> roc_curve(const ScoredSet& scored) {
  require_both_classes(scored, "roc_curve");
  const double n_pos = static_cast<double>(scored.positives());
  const double n_neg = static_cast<double>(scored.negatives());
  std::vector<RocPoint> points{{0.0, 0.0, kStartThreshold}};
  for (const auto& s : sweep(scored)) {
    points.push_back({static_cast<double>(s.fp) / n_neg, static_cast<double>(s.tp) / n_pos,
                      s.threshold});
  }
  return points;
}

double auc_roc(const ScoredSet& scored) {
  require_both_classes(scored, "auc_roc");
  // Trapezoids in integer counts: sum (fp_i - fp_{i-1}) (tp_i + tp_{i-1}),
  // divided once by 2 * n_pos * n_neg.
  long double area = 0.0L;
  std::size_t prev_tp = 0;
  std::size_t prev_fp = 0;
  for (const auto& s : sweep(scored)) {
    area += static_cast<long double>(s.fp - prev_fp) * static_cast<long double>(s.tp + prev_tp);
    prev_tp = s.tp;
    prev_fp = s.fp;
  }
  const long double denom = 2.0L * static_cast<long double>(scored.positives()) *
                            static_cast<long double>(scored.negatives());
  return static_cast<double>(area / denom);
}

std::vector<PrPoint> pr_curve(const ScoredSet& scored) {
  const std::size_t n_pos = scored.positives();
  if (n_pos == 0) throw ValidationError("pr_curve: needs at least one positive");
  std::vector<PrPoint> points;
  for (const auto& s : sweep(scored)) {
    const std::size_t predicted = s.tp + s.fp;
    const double precision =
        predicted == 0 ? 1.0 : static_cast<double>(s.tp) / static_cast<double>(predicted);
    points.push_back(
        {static_cast<double>(s.tp) / static_cast<double>(n_pos), precision, s.threshold});
  }
  return points;
}

double auc_pr(const ScoredSet& scored) {
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : pr_curve(scored)) {
    area += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return area;
}

ScoreHistogram score_histograms(const ScoredSet& scored, std::size_t n_bins) {
  if (n_bins < 1) throw ValidationError("score_histograms: n_bins must be >= 1");
  ScoreHistogram h;
  for (std::size_t i = 0; i <= n_bins; ++i) {
    h.bin_edges.push_back(static_cast<double>(i) / static_cast<double>(n_bins));
  }
  h.negative.assign(n_bins, 0);
  h.positive.assign(n_bins, 0);
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const double s = std::clamp(scored.scores[i], 0.0, 1.0);
    auto bin = static_cast<std::size_t>(s * static_cast<double>(n_bins));
    bin = std::min(bin, n_bins - 1);
    (scored.labels[i] ? h.positive : h.negative)[bin] += 1;
  }
  return h;
}

namespace {

std::uint64_t digest_labels(const std::vector<bool>& labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ labels.size();
  for (bool b : labels) {
    h ^= b ? 0x9dULL : 0x3bULL;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

MetricsReport evaluate_scores(const ScoredSet& scored, std::size_t n_bins) {
  MetricsReport r;
  r.roc = roc_curve(scored);
  r.aucroc = auc_roc(scored);
  r.pr = pr_curve(scored);
  r.aucpr = auc_pr(scored);
  r.histogram = score_histograms(scored, n_bins);
  r.n_pos = scored.positives();
  r.n_neg = scored.negatives();
  r.label_digest = digest_labels(scored.labels);
  return r;
}

double sensitivity_at_specificity(const std::vector<RocPoint>& roc, double specificity) {
  const double max_fpr = 1.0 - specificity;
  double best = 0.0;
  for (const auto& p : roc) {
    // Small tolerance so e.g. 1 - 0.7 still admits fpr == 0.3.
    if (p.fpr <= max_fpr + 1e-12) best = std::max(best, p.tpr);
  }
  return best;
}

ComparisonReport compare(const MetricsReport& a, const MetricsReport& b) {
  if (a.n_pos != b.n_pos || a.n_neg != b.n_neg || a.label_digest != b.label_digest) {
    throw ValidationError("compare: reports were computed on different label sets");
  }
  ComparisonReport c;
  c.aucroc_a = a.aucroc;
  c.aucroc_b = b.aucroc;
  c.delta_aucroc = a.aucroc - b.aucroc;
  c.aucpr_a = a.aucpr;
  c.aucpr_b = b.aucpr;
  c.delta_aucpr = a.aucpr - b.aucpr;
  for (double spec : kComparisonSpecificities) {
    const double sa = sensitivity_at_specificity(a.roc, spec);
    const double sb = sensitivity_at_specificity(b.roc, spec);
    c.operating_points.push_back({spec, sa, sb, sa - sb});
  }
  return c;
}

std::vector<std::vector<double>> permutation_importance_repeats(
    const MlpModel& model, const Scaler& scaler, const std::vector<LabeledSample>& samples,
    int n_repeats, std::uint64_t seed) {
  if (n_repeats < 1) throw ValidationError("permutation_importance: n_repeats must be >= 1");
  std::vector<FeatureVector> rows;
  std::vector<bool> labels;
  for (const auto& s : samples) {
    rows.push_back(s.features);
    labels.push_back(s.label);
  }
  const ScoredSet base = make_scored(predict(model, scaler, rows), labels);
  require_both_classes(base, "permutation_importance");
  const double baseline = auc_roc(base);

  const std::size_t d = model.input_dim();
  std::vector<std::vector<double>> drops(d);
  std::vector<std::size_t> perm(rows.size());
  for (std::size_t f = 0; f < d; ++f) {
    const std::string name =
        f < model.feature_names.size() ? model.feature_names[f] : "column_" + std::to_string(f);
    Rng rng(mix_seed(seed, fnv1a(name)));
    std::vector<double> column(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = rows[i][f];
    for (int r = 0; r < n_repeats; ++r) {
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i][f] = column[perm[i]];
      drops[f].push_back(baseline - auc_roc(make_scored(predict(model, scaler, rows), labels)));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i][f] = column[i];
  }
  return drops;
}

std::vector<double> permutation_importance(const MlpModel& model, const Scaler& scaler,
                                           const std::vector<LabeledSample>& samples,
                                           int n_repeats, std::uint64_t seed) {
  const auto repeats = permutation_importance_repeats(model, scaler, samples, n_repeats, seed);
  std::vector<double> mean;
  for (const auto& r : repeats) {
    mean.push_back(std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size()));
  }
  return mean;
}

// ---- export -------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void write_report_dir(const std::filesystem::path& dir, const MetricsReport& report) {
  using text::format_double;
  std::filesystem::create_directories(dir);
  auto roc = open_out(dir / "roc.csv");
  roc << "fpr,tpr,threshold\n";
  for (const auto& p : report.roc) {
    roc << format_double(p.fpr) << ',' << format_double(p.tpr) << ',' << format_double(p.threshold)
        << '\n';
  }
  auto pr = open_out(dir / "pr.csv");
  pr << "recall,precision,threshold\n";
  for (const auto& p : report.pr) {
    pr << format_double(p.recall) << ',' << format_double(p.precision) << ','
       << format_double(p.threshold) << '\n';
  }
  auto hist = open_out(dir / "histogram.csv");
  hist << "bin_lo,bin_hi,neg_count,pos_count\n";
  const auto& h = report.histogram;
  for (std::size_t i = 0; i < h.negative.size(); ++i) {
    hist << format_double(h.bin_edges[i]) << ',' << format_double(h.bin_edges[i + 1]) << ','
         << h.negative[i] << ',' << h.positive[i] << '\n';
  }
  auto summary = open_out(dir / "summary.csv");
  summary << "metric,value\n"
          << "aucroc," << format_double(report.aucroc) << '\n'
          << "aucpr," << format_double(report.aucpr) << '\n'
          << "n_pos," << report.n_pos << '\n'
          << "n_neg," << report.n_neg << '\n';
}

void write_comparison(const std::filesystem::path& file, const ComparisonReport& c,
                      std::string_view name_a, std::string_view name_b) {
  using text::format_double;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  auto out = open_out(file);
  out << "metric," << name_a << ',' << name_b << ",delta\n";
  out << "aucroc," << format_double(c.aucroc_a) << ',' << format_double(c.aucroc_b) << ','
      << format_double(c.delta_aucroc) << '\n';
  out << "aucpr," << format_double(c.aucpr_a) << ',' << format_double(c.aucpr_b) << ','
      << format_double(c.delta_aucpr) << '\n';
  for (const auto& op : c.operating_points) {
    out << "sensitivity@spec" << format_double(op.specificity) << ','
        << format_double(op.sensitivity_a) << ',' << format_double(op.sensitivity_b) << ','
        << format_double(op.delta) << '\n';
  }
}

}  // namespace hfrisk
