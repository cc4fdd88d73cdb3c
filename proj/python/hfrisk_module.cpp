#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hfrisk/cohort_sim.hpp"
#include "hfrisk/error.hpp"
#include "hfrisk/metrics.hpp"
#include "hfrisk/triage.hpp"
#include "hfrisk/workflow.hpp"

namespace py = pybind11;
using namespace hfrisk;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<FeatureVector> rows_of(const Matrix& x) {
  if (x.ndim() != 2) throw py::value_error("expected a 2-d array of feature rows");
  const auto r = x.unchecked<2>();
  std::vector<FeatureVector> rows(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    rows[static_cast<std::size_t>(i)].assign(r.data(i, 0), r.data(i, 0) + r.shape(1));
  }
  return rows;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(py::ssize_t(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ScoredSet scored(const std::vector<double>& scores, const std::vector<bool>& labels) {
  return make_scored(scores, labels);
}

py::dict samples_dict(const std::vector<LabeledSample>& samples) {
  py::array_t<double> x({py::ssize_t(samples.size()), py::ssize_t(kFeatureCount)});
  py::array_t<bool> y(py::ssize_t(samples.size()));
  auto xm = x.mutable_unchecked<2>();
  auto ym = y.mutable_unchecked<1>();
  std::vector<std::string> ids, dates;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) xm(py::ssize_t(i), py::ssize_t(f)) = samples[i].features[f];
    ym(py::ssize_t(i)) = samples[i].label;
    ids.push_back(samples[i].patient_id);
    dates.push_back(samples[i].date.iso());
  }
  py::dict d;
  d["X"] = x;
  d["y"] = y;
  d["patient_id"] = ids;
  d["date"] = dates;
  return d;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["aucroc"] = r.aucroc;
  d["aucpr"] = r.aucpr;
  d["n_pos"] = r.n_pos;
  d["n_neg"] = r.n_neg;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hfrisk, m) {
  m.doc() = "Heart-failure risk scoring core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_KeyError);

  m.attr("FEATURE_SCHEMA_VERSION") = std::string(kFeatureSchemaVersion);
  m.def("feature_names", [] { return std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end()); });

  m.def(
      "simulate",
      [](const std::filesystem::path& out, int n_patients, int days, std::uint64_t seed) {
        CohortConfig c;
        c.n_patients = n_patients;
        c.horizon_days = days;
        c.seed = seed;
        const Cohort cohort = generate_cohort(c);
        write_cohort_dir(out, cohort);
        const auto s = summarize_cohort(cohort);
        py::dict d;
        d["patients"] = s.patients;
        d["measurements"] = s.measurements;
        d["events"] = cohort.events.size();
        d["deaths"] = s.deaths;
        d["positive_day_rate"] = s.positive_day_rate;
        d["missing_rate"] = s.missing_rate;
        return d;
      },
      py::arg("out_dir"), py::arg("n_patients") = 763, py::arg("days") = 365, py::arg("seed") = 1,
      "Generate a synthetic cohort into out_dir and return its summary.");

  m.def(
      "load_samples",
      [](const std::filesystem::path& cohort_dir, int horizon) {
        return samples_dict(assemble_samples(load_cohort_dir(cohort_dir), horizon));
      },
      py::arg("cohort_dir"), py::arg("horizon_days") = 0,
      "Assemble labeled samples; returns dict with X, y, patient_id, date.");

  m.def("impute_series", &impute_series, py::arg("values"));

  m.def("auc_roc", [](const std::vector<double>& s, const std::vector<bool>& y) { return auc_roc(scored(s, y)); },
        py::arg("scores"), py::arg("labels"));
  m.def("auc_pr", [](const std::vector<double>& s, const std::vector<bool>& y) { return auc_pr(scored(s, y)); },
        py::arg("scores"), py::arg("labels"));
  m.def(
      "roc_curve",
      [](const std::vector<double>& s, const std::vector<bool>& y) {
        std::vector<double> fpr, tpr, thr;
        for (const auto& p : roc_curve(scored(s, y))) {
          fpr.push_back(p.fpr);
          tpr.push_back(p.tpr);
          thr.push_back(p.threshold);
        }
        return py::make_tuple(to_array(fpr), to_array(tpr), to_array(thr));
      },
      py::arg("scores"), py::arg("labels"), "Returns (fpr, tpr, threshold) arrays.");
  m.def(
      "pr_curve",
      [](const std::vector<double>& s, const std::vector<bool>& y) {
        std::vector<double> rec, prec, thr;
        for (const auto& p : pr_curve(scored(s, y))) {
          rec.push_back(p.recall);
          prec.push_back(p.precision);
          thr.push_back(p.threshold);
        }
        return py::make_tuple(to_array(rec), to_array(prec), to_array(thr));
      },
      py::arg("scores"), py::arg("labels"), "Returns (recall, precision, threshold) arrays.");

  py::class_<MlpModel>(m, "Model")
      .def_static("load", [](const std::filesystem::path& p) { return load_model_file(p); }, py::arg("path"))
      .def("save", [](const MlpModel& self, const std::filesystem::path& p) { save_model_file(p, self); }, py::arg("path"))
      .def("predict", [](const MlpModel& self, const Matrix& x) { return to_array(predict(self, rows_of(x))); },
           py::arg("X"), "Risk scores for raw (unstandardized) feature rows.")
      .def_property_readonly("layer_dims", [](const MlpModel& self) { return self.layer_dims; })
      .def_property_readonly("activations",
                             [](const MlpModel& self) {
                               std::vector<std::string> out;
                               for (auto a : self.activations) out.emplace_back(to_string(a));
                               return out;
                             })
      .def_property_readonly("dropout_rates", [](const MlpModel& self) { return self.dropout_rates; })
      .def_property_readonly("feature_schema_version", [](const MlpModel& self) { return self.feature_schema_version; })
      .def_property_readonly("parameter_count", &MlpModel::parameter_count)
      .def("to_json", [](const MlpModel& self) {
        std::ostringstream out;
        save_model(out, self);
        return out.str();
      });

  py::class_<RuleSet>(m, "RuleSet")
      .def_static("default", &default_ruleset)
      .def_static("parse", [](const std::string& text) { return parse_ruleset(text); }, py::arg("text"))
      .def_readonly("version", &RuleSet::version)
      .def("__len__", [](const RuleSet& self) { return self.rules.size(); })
      .def("serialize", [](const RuleSet& self) { return serialize(self); })
      .def("score",
           [](const RuleSet& self, const Matrix& x) {
             std::vector<double> out;
             for (const auto& row : rows_of(x)) out.push_back(evaluate(self, row));
             return to_array(out);
           },
           py::arg("X"))
      .def("fired", [](const RuleSet& self, const std::vector<double>& row) { return fired_rules(self, row); },
           py::arg("features"));

  m.def(
      "train",
      [](const std::filesystem::path& data, std::uint64_t seed, int max_epochs, std::optional<int> patience,
         std::vector<int> hidden, std::string activation, std::vector<double> dropout, int horizon) {
        ExperimentConfig c;
        c.hidden = std::move(hidden);
        auto act = parse_activation(activation);
        if (!act) throw ValidationError("unknown activation '" + activation + "'");
        c.activations.assign(c.hidden.size(), *act);
        c.dropout_rates = std::move(dropout);
        c.train.seed = seed;
        c.train.max_epochs = max_epochs;
        c.train.patience = patience;
        c.split_seed = seed;
        c.label_horizon_days = horizon;
        Experiment e;
        {
          py::gil_scoped_release release;
          const bool split_dir = std::filesystem::exists(data / "train.csv");
          e = split_dir ? run_experiment(read_split_dir(data), c) : run_experiment(load_cohort_dir(data), c);
        }
        py::dict history;
        std::vector<double> train_loss, val_loss, val_auc;
        for (const auto& r : e.trained.history.epochs) {
          train_loss.push_back(r.train_loss);
          val_loss.push_back(r.validation_loss);
          val_auc.push_back(r.validation_auc);
        }
        history["train_loss"] = train_loss;
        history["validation_loss"] = val_loss;
        history["validation_auc"] = val_auc;
        history["selected_epoch"] = e.trained.history.selected_epoch;
        const auto test = evaluate_scores(score_samples(Scorer(e.trained.model), e.data.raw.test));
        py::dict test_split = samples_dict(e.data.raw.test);
        return py::make_tuple(e.trained.model, history, report_dict(test), test_split);
      },
      py::arg("data"), py::arg("seed") = 1, py::arg("max_epochs") = 453, py::arg("patience") = 50,
      py::arg("hidden") = std::vector<int>{35, 20, 35}, py::arg("activation") = "relu",
      py::arg("dropout") = std::vector<double>{0.25, 0.15, 0.3}, py::arg("horizon_days") = 0,
      "Train on a cohort or preprocessed directory. Returns (model, history, test_metrics, test_samples).");

  m.def(
      "build_worklist",
      [](const std::map<std::string, double>& scores,
         const std::map<std::string, std::pair<std::string, std::optional<std::string>>>& reviews,
         const std::string& date, std::size_t capacity, int coverage_days) {
        ReviewState state;
        for (const auto& [id, rec] : reviews) {
          ReviewRecord r{Date::parse(rec.first), std::nullopt};
          if (rec.second) r.last_review_date = Date::parse(*rec.second);
          state.patients[id] = r;
        }
        const auto w = build_worklist(scores, state, Date::parse(date), capacity, coverage_days);
        py::list out;
        for (const auto& e : w.entries) {
          py::dict d;
          d["patient_id"] = e.patient_id;
          d["risk"] = e.risk;
          d["days_since_review"] = e.days_since_review;
          d["overdue"] = e.overdue;
          d["coverage"] = e.coverage;
          out.append(d);
        }
        return out;
      },
      py::arg("scores"), py::arg("reviews"), py::arg("date"), py::arg("capacity"), py::arg("coverage_days"),
      "reviews maps patient_id to (enrollment_date, last_review_date or None).");
}
