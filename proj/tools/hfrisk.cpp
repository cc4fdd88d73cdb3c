// hfrisk: offline experiments and the REST service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "hfrisk/cohort_sim.hpp"
#include "hfrisk/error.hpp"
#include "hfrisk/metrics.hpp"
#include "hfrisk/service.hpp"
#include "hfrisk/store.hpp"
#include "hfrisk/text.hpp"
#include "hfrisk/triage.hpp"
#include "hfrisk/workflow.hpp"

namespace fs = std::filesystem;
using namespace hfrisk;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
};

[[noreturn]] void usage_error(const std::string& what) { throw ValidationError(what); }

const std::string& need_out(const Globals& g) {
  if (g.out.empty()) usage_error("--out is required");
  return g.out;
}

bool is_split_dir(const fs::path& dir) { return fs::exists(dir / "train.csv") && fs::exists(dir / "scaler.csv"); }

ExperimentConfig experiment_from(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
  if (g.seed) {
    c.train.seed = *g.seed;
    c.split_seed = *g.seed;
  }
  return c;
}

void write_text(const fs::path& file, const std::string& content) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) usage_error("cannot write " + file.string());
  out << content;
}

/// Raw split for `data`: a preprocessed directory as is, a cohort directory
/// assembled and split with `split_seed`.
DatasetSplit load_split(const fs::path& data, std::uint64_t split_seed, int horizon) {
  if (is_split_dir(data)) return read_split_dir(data);
  return split_by_patient(assemble_samples(load_cohort_dir(data), horizon), split_seed);
}

Scorer load_scorer(const std::string& model, const std::string& rules) {
  if (!model.empty()) return Scorer(load_model_file(model));
  if (rules.empty() || rules == "default") return Scorer(default_ruleset());
  return Scorer(load_ruleset_file(rules));
}

void print_report(const std::string& name, const MetricsReport& r) {
  std::printf("%s: aucroc=%s aucpr=%s n_pos=%zu n_neg=%zu\n", name.c_str(), text::format_double(r.aucroc).c_str(),
              text::format_double(r.aucpr).c_str(), r.n_pos, r.n_neg);
}

// ---- subcommands -------------------------------------------------------------

struct SimulateArgs {
  std::optional<int> patients;
  std::optional<int> days;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  CohortConfig c;
  if (!g.config.empty()) {
    std::ifstream in(g.config);
    if (!in) usage_error("cannot open " + g.config);
    c = parse_cohort_config(in, g.config);
  }
  if (a.patients) c.n_patients = *a.patients;
  if (a.days) c.horizon_days = *a.days;
  if (g.seed) c.seed = *g.seed;
  validate(c);
  const fs::path out = need_out(g);
  const Cohort cohort = generate_cohort(c);
  write_cohort_dir(out, cohort);
  std::ofstream cfg(out / "cohort.cfg");
  write_cohort_config(cfg, c);
  const auto s = summarize_cohort(cohort);
  std::printf("patients=%zu measurements=%zu events=%zu deaths=%zu positive_day_rate=%s\n", s.patients,
              s.measurements, cohort.events.size(), s.deaths, text::format_double(s.positive_day_rate).c_str());
  return 0;
}

struct DataArgs {
  std::string data;
  std::optional<int> horizon;
};

int cmd_preprocess(const Globals& g, const DataArgs& a) {
  ExperimentConfig c = experiment_from(g);
  if (a.horizon) c.label_horizon_days = *a.horizon;
  const fs::path out = need_out(g);
  const auto samples = assemble_samples(load_cohort_dir(a.data), c.label_horizon_days);
  const auto split = split_by_patient(samples, c.split_seed);
  write_split_dir(out, split);
  std::ofstream cfg(out / "experiment.cfg");
  write_experiment_config(cfg, c);
  std::printf("samples=%zu train=%zu validation=%zu test=%zu\n", samples.size(), split.train.size(),
              split.validation.size(), split.test.size());
  return 0;
}

struct TrainArgs {
  std::string data;
  std::optional<int> horizon;
  std::optional<int> epochs;
  std::string metrics;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  ExperimentConfig c = experiment_from(g);
  if (a.horizon) c.label_horizon_days = *a.horizon;
  if (a.epochs) c.train.max_epochs = *a.epochs;
  const fs::path data = a.data;
  if (is_split_dir(data) && g.config.empty() && fs::exists(data / "experiment.cfg")) {
    // Keep the preprocessing provenance; flags still override the seed.
    auto pre = load_experiment_config(data / "experiment.cfg");
    c.split_seed = pre.split_seed;
    c.label_horizon_days = pre.label_horizon_days;
  }
  const DatasetSplit raw = load_split(data, c.split_seed, c.label_horizon_days);
  const Experiment e = run_experiment(raw, c);
  save_model_file(need_out(g), e.trained.model, provenance_of(c));
  const auto report = evaluate_scores(score_samples(Scorer(e.trained.model), e.data.raw.test));
  std::printf("selected_epoch=%d validation_auc=%s epochs_run=%zu\n", e.trained.history.selected_epoch,
              text::format_double(e.trained.history.best_validation_auc()).c_str(),
              e.trained.history.epochs.size());
  print_report("test", report);
  if (!a.metrics.empty()) write_report_dir(a.metrics, report);
  return 0;
}

struct SearchArgs {
  std::string data;
  int budget = 10;
  std::optional<int> epochs;
};

int cmd_search(const Globals& g, const SearchArgs& a) {
  ExperimentConfig c = experiment_from(g);
  if (a.epochs) c.train.max_epochs = *a.epochs;
  const fs::path out = need_out(g);
  const PreparedData d = prepare(load_split(a.data, c.split_seed, c.label_horizon_days), c.split_seed);
  SearchSpace space;
  space.budget = a.budget;
  space.seed = c.train.seed;
  const auto result = random_search(space, d.ready, c.train);
  fs::create_directories(out);
  save_model_file(out / "best.model", result.best, provenance_of(c));
  std::ofstream lb(out / "leaderboard.csv");
  lb << "rank,trial,hidden,activation,dropout,validation_auc,selected_epoch\n";
  for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
    const auto& e = result.leaderboard[i];
    std::string hidden, dropout;
    for (std::size_t l = 0; l < e.candidate.hidden.size(); ++l) {
      hidden += (l ? " " : "") + std::to_string(e.candidate.hidden[l]);
      dropout += (l ? " " : "") + text::format_double(e.candidate.dropout_rates[l]);
    }
    lb << i + 1 << ',' << e.trial << ',' << hidden << ',' << to_string(e.candidate.activation) << ',' << dropout
       << ',' << text::format_double(e.validation_auc) << ',' << e.selected_epoch << '\n';
  }
  std::printf("best validation_auc=%s\n", text::format_double(result.leaderboard.front().validation_auc).c_str());
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string model;
  std::string rules;
  std::optional<int> horizon;
  int importance_repeats = 0;
};

/// Test split for evaluating `scorer`; a model's own provenance picks the
/// split when the data is a cohort directory.
DatasetSplit eval_split(const Globals& g, const EvalArgs& a, const std::string& model_file) {
  std::uint64_t seed = g.seed.value_or(1);
  int horizon = a.horizon.value_or(0);
  if (!model_file.empty()) {
    ModelProvenance p;
    load_model_file(model_file, &p);
    if (!g.seed && p.split_seed) seed = *p.split_seed;
    if (!a.horizon && p.label_horizon_days) horizon = *p.label_horizon_days;
  }
  return load_split(a.data, seed, horizon);
}

int cmd_eval(const Globals& g, const EvalArgs& a) {
  if (!a.model.empty() && !a.rules.empty()) usage_error("give either --model or --rules");
  const fs::path out = need_out(g);
  const Scorer scorer = load_scorer(a.model, a.rules);
  const auto split = eval_split(g, a, a.model);
  const auto report = evaluate_scores(score_samples(scorer, split.test));
  write_report_dir(out, report);
  print_report(std::string(scorer.kind()), report);
  if (a.importance_repeats > 0) {
    if (!scorer.model()) usage_error("--importance needs --model");
    const auto& m = *scorer.model();
    const auto imp = permutation_importance(m, m.scaler, split.test, a.importance_repeats, g.seed.value_or(1));
    std::ofstream f(out / "importance.csv");
    f << "feature,importance\n";
    for (std::size_t i = 0; i < imp.size(); ++i) f << kFeatureNames[i] << ',' << text::format_double(imp[i]) << '\n';
  }
  return 0;
}

int cmd_compare(const Globals& g, const EvalArgs& a) {
  if (a.model.empty()) usage_error("--model is required");
  const fs::path out = need_out(g);
  const auto split = eval_split(g, a, a.model);
  const Scorer model(load_model_file(a.model));
  const Scorer rules = load_scorer("", a.rules);
  const auto rm = evaluate_scores(score_samples(model, split.test));
  const auto rr = evaluate_scores(score_samples(rules, split.test));
  write_report_dir(out / "model", rm);
  write_report_dir(out / "rules", rr);
  const auto cmp = compare(rm, rr);
  write_comparison(out / "comparison.csv", cmp, "model", "rules");
  print_report("model", rm);
  print_report("rules", rr);
  std::printf("delta_aucroc=%s\n", text::format_double(cmp.delta_aucroc).c_str());
  return 0;
}

struct TriageArgs {
  std::string data;
  std::string model;
  std::string rules;
  std::size_t capacity = 0;
  int coverage_days = 14;
};

int cmd_triage_sim(const Globals& g, const TriageArgs& a) {
  const fs::path out = need_out(g);
  const Cohort cohort = load_cohort_dir(a.data);
  const Scorer scorer = load_scorer(a.model, a.rules);

  std::map<std::string, const PatientProfile*> profiles;
  for (const auto& p : cohort.profiles) profiles[p.patient_id] = &p;
  std::map<std::string, std::vector<DailyMeasurement>> rows;
  for (const auto& m : cohort.measurements) rows[m.patient_id].push_back(m);
  std::map<std::string, Date> deaths;
  for (const auto& e : cohort.events) {
    if (e.kind == EventKind::death) deaths[e.patient_id] = e.date;
  }

  std::vector<TriagePatient> roster;
  std::optional<Date> start, end;
  for (auto& [id, list] : rows) {
    std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) { return x.date < y.date; });
    Date exit = list.back().date;
    if (auto d = deaths.find(id); d != deaths.end()) exit = std::min(exit, d->second);
    roster.push_back({id, list.front().date, exit});
    start = start ? std::min(*start, list.front().date) : list.front().date;
    end = end ? std::max(*end, exit) : exit;
  }
  if (roster.empty()) usage_error("cohort has no measurements");

  RiskFn risk = [&](const std::string& id, Date day) -> std::optional<double> {
    auto fv = features_as_of(*profiles.at(id), rows.at(id), day);
    if (!fv) return std::nullopt;
    return scorer.score(*fv);
  };
  std::size_t capacity = a.capacity;
  if (capacity == 0) {
    // Smallest capacity meeting the precondition.
    std::size_t max_active = 0;
    for (Date d = *start; d <= *end; d = d + 1) {
      std::size_t n = 0;
      for (const auto& p : roster) n += p.enrollment_date <= d && d <= p.exit_date;
      max_active = std::max(max_active, n);
    }
    capacity = (max_active + static_cast<std::size_t>(a.coverage_days) - 1) / static_cast<std::size_t>(a.coverage_days);
  }
  const auto report = simulate_triage(roster, risk, *start, *end - *start + 1, capacity, a.coverage_days);
  std::ofstream f(out);
  if (!f) usage_error("cannot write " + out.string());
  write_coverage_csv(f, report);
  std::printf("capacity=%zu coverage_days=%d max_gap_days=%d coverage_capacity_fraction=%s feasible=%s\n", capacity,
              a.coverage_days, report.max_gap_days, text::format_double(report.coverage_capacity_fraction).c_str(),
              report.guarantee_feasible ? "yes" : "no");
  if (!report.guarantee_feasible) std::fprintf(stderr, "warning: %s\n", report.precondition_violation.c_str());
  return 0;
}

struct ServeArgs {
  ServiceConfig cfg;
  std::string mode = "live";
  std::string model;
  std::string rules;
  std::string sim_start;
  std::string port_file;
};

Service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_serve(const Globals& g, ServeArgs a) {
  if (a.mode == "sim") a.cfg.mode = ServiceMode::sim;
  else if (a.mode != "live") usage_error("--mode must be live or sim");
  if (!a.model.empty()) a.cfg.model_id = a.model;
  if (!a.rules.empty() && a.rules != "default") a.cfg.rules_file = a.rules;
  if (!a.sim_start.empty()) a.cfg.sim_start = Date::parse(a.sim_start);
  if (!g.config.empty()) a.cfg.experiment = load_experiment_config(g.config);
  if (g.seed) a.cfg.experiment.train.seed = a.cfg.experiment.split_seed = *g.seed;
  Service service(a.cfg);
  const int port = service.bind();
  std::printf("listening on %s:%d\n", a.cfg.host.c_str(), port);
  std::fflush(stdout);
  if (!a.port_file.empty()) write_text(a.port_file, std::to_string(port) + "\n");
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heart-failure risk scoring: simulation, training, evaluation and triage service"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--config", g.config, "Config file (cohort for simulate, experiment otherwise)");
  auto globals = [&](CLI::App* sub) {
    sub->fallthrough();
    return sub;
  };

  SimulateArgs sim;
  auto* simulate = globals(app.add_subcommand("simulate", "Generate a synthetic cohort"));
  simulate->add_option("--patients", sim.patients, "Number of patients");
  simulate->add_option("--days", sim.days, "Follow-up days");

  DataArgs pre;
  auto* preprocess = globals(app.add_subcommand("preprocess", "Assemble samples and split by patient"));
  preprocess->add_option("--data", pre.data, "Cohort directory")->required()->check(CLI::ExistingDirectory);
  preprocess->add_option("--horizon", pre.horizon, "Label horizon in days");

  TrainArgs tr;
  auto* train_cmd = globals(app.add_subcommand("train", "Train the MLP"));
  train_cmd->add_option("--data", tr.data, "Cohort or preprocessed directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--horizon", tr.horizon, "Label horizon in days");
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs");
  train_cmd->add_option("--metrics", tr.metrics, "Write test-set metrics to this directory");

  SearchArgs se;
  auto* search = globals(app.add_subcommand("search", "Random hyperparameter search"));
  search->add_option("--data", se.data, "Cohort or preprocessed directory")->required()->check(CLI::ExistingDirectory);
  search->add_option("--budget", se.budget, "Number of candidates")->check(CLI::PositiveNumber);
  search->add_option("--epochs", se.epochs, "Maximum epochs per candidate");

  EvalArgs ev;
  auto* eval = globals(app.add_subcommand("eval", "Metrics of one scorer on the test split"));
  eval->add_option("--data", ev.data, "Cohort or preprocessed directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--model", ev.model, "Model file")->check(CLI::ExistingFile);
  eval->add_option("--rules", ev.rules, "Rule file or 'default'");
  eval->add_option("--horizon", ev.horizon, "Label horizon in days");
  eval->add_option("--importance", ev.importance_repeats, "Permutation importance repeats (model only)");

  EvalArgs cmp;
  auto* compare_cmd = globals(app.add_subcommand("compare", "Model versus rules on the test split"));
  compare_cmd->add_option("--data", cmp.data, "Cohort or preprocessed directory")->required()->check(CLI::ExistingDirectory);
  compare_cmd->add_option("--model", cmp.model, "Model file")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--rules", cmp.rules, "Rule file or 'default'")->default_val("default");
  compare_cmd->add_option("--horizon", cmp.horizon, "Label horizon in days");

  TriageArgs ts;
  auto* triage = globals(app.add_subcommand("triage-sim", "Replay daily worklists over a cohort"));
  triage->add_option("--data", ts.data, "Cohort directory")->required()->check(CLI::ExistingDirectory);
  triage->add_option("--model", ts.model, "Model file (default: rules)")->check(CLI::ExistingFile);
  triage->add_option("--rules", ts.rules, "Rule file or 'default'");
  triage->add_option("--capacity", ts.capacity, "Reviews per day (default: ceil(max active / D))");
  triage->add_option("--coverage-days", ts.coverage_days, "Review every patient within D days")->check(CLI::PositiveNumber);

  ServeArgs sv;
  auto* serve = globals(app.add_subcommand("serve", "Run the REST service"));
  serve->add_option("--port", sv.cfg.port, "Port (0 picks a free one)");
  serve->add_option("--host", sv.cfg.host, "Bind address");
  serve->add_option("--data-dir", sv.cfg.data_dir, "Store and model directory")->required();
  serve->add_option("--model", sv.model, "Model id under data-dir/models or model file");
  serve->add_option("--rules", sv.rules, "Fallback rule file or 'default'");
  serve->add_option("--capacity", sv.cfg.capacity, "Default worklist capacity")->check(CLI::PositiveNumber);
  serve->add_option("--coverage-days", sv.cfg.coverage_days, "Coverage period D")->check(CLI::PositiveNumber);
  serve->add_option("--mode", sv.mode, "live or sim");
  serve->add_option("--sim-start", sv.sim_start, "First sim-mode day (YYYY-MM-DD)");
  serve->add_option("--port-file", sv.port_file, "Write the bound port here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*simulate) return cmd_simulate(g, sim);
    if (*preprocess) return cmd_preprocess(g, pre);
    if (*train_cmd) return cmd_train(g, tr);
    if (*search) return cmd_search(g, se);
    if (*eval) return cmd_eval(g, ev);
    if (*compare_cmd) return cmd_compare(g, cmp);
    if (*triage) return cmd_triage_sim(g, ts);
    if (*serve) return cmd_serve(g, sv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hfrisk: error: %s\n", e.what());
    return 1;
  }
  return 2;
}
