#include "hfrisk/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <thread>

#include "hfrisk/error.hpp"
#include "hfrisk/json_io.hpp"
#include "hfrisk/store.hpp"
#include "hfrisk/text.hpp"

namespace hfrisk {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kPrefix = "/api/v1";

/// Error with an HTTP status and a machine-readable code.
struct ApiError : std::runtime_error {
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
  return {status, json{{"code", code}, {"message", message}}};
}

std::vector<std::string> path_segments(std::string_view path) {
  std::vector<std::string> out;
  for (auto& part : text::split(path, '/')) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

Date system_today() {
  return Date(std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now()));
}

Date parse_date_param(const std::string& value, const char* name) {
  try {
    return Date::parse(value);
  } catch (const std::invalid_argument&) {
    throw ApiError(400, "bad_request", std::string("parameter '") + name + "' must be YYYY-MM-DD");
  }
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, "bad_request", std::string("body is not valid JSON: ") + e.what());
  }
}

std::vector<json> items_of(const json& body) {
  if (body.is_array()) return {body.begin(), body.end()};
  return {body};
}

enum class JobStatus { queued, running, done, failed };

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "?";
}

struct TrainJob {
  std::string job_id;
  JobStatus status = JobStatus::queued;
  TrainConfig config;
  std::optional<std::string> model_id;
  std::optional<std::string> error;
};

json to_json(const TrainJob& job) {
  json j{{"job_id", job.job_id}, {"status", to_string(job.status)}, {"config", hfrisk::to_json(job.config)}};
  j["model_id"] = job.model_id ? json(*job.model_id) : json(nullptr);
  j["error"] = job.error ? json(*job.error) : json(nullptr);
  return j;
}

struct ActiveScorer {
  std::shared_ptr<const Scorer> scorer;
  std::optional<std::string> model_id;
  /// Top features by importance for the model scorer, if known.
  std::vector<std::string> top_features;
};

constexpr std::size_t kDailyOffset = static_cast<std::size_t>(index_of(Feature::weight_kg));

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  fs::path models_dir;

  mutable std::shared_mutex mutex;  // guards store, active, sim_today
  Store store;
  ActiveScorer active;
  RuleSet rules;
  Date sim_today;

  std::mutex jobs_mutex;
  std::condition_variable jobs_cv;
  std::map<std::string, TrainJob> jobs;
  std::deque<std::string> queue;
  std::size_t job_counter = 0;
  std::size_t model_counter = 0;
  bool busy = false;
  bool stopping = false;
  std::thread worker;

  httplib::Server server;
  int bound_port = -1;

  explicit Impl(ServiceConfig cfg)
      : config(std::move(cfg)), models_dir(config.data_dir / "models"), store(Store::open(config.data_dir / "store")) {
    if (config.capacity < 1) throw ValidationError("service: capacity must be >= 1");
    if (config.coverage_days < 1) throw ValidationError("service: coverage days must be >= 1");
    fs::create_directories(models_dir);
    for (const auto& entry : fs::directory_iterator(models_dir)) {
      const auto name = entry.path().filename().string();
      if (name.size() > 2 && name.starts_with("m-")) {
        if (auto n = text::parse_int(name.substr(2))) model_counter = std::max<std::size_t>(model_counter, *n);
      }
    }
    rules = config.rules_file ? load_ruleset_file(config.rules_file->string()) : default_ruleset();
    sim_today = store.clock().value_or(config.sim_start.value_or(system_today()));

    if (config.model_id) {
      active = load_scorer(*config.model_id);
    } else if (store.active_model()) {
      active = load_scorer(*store.active_model());
    } else {
      active = {std::make_shared<Scorer>(rules), std::nullopt, {}};
    }
    worker = std::thread([this] { work(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(jobs_mutex);
      stopping = true;
    }
    jobs_cv.notify_all();
    if (worker.joinable()) worker.join();
  }

  Date today() const {
    if (config.mode == ServiceMode::live) return system_today();
    std::shared_lock lock(mutex);
    return sim_today;
  }

  fs::path model_file(const std::string& id) const { return models_dir / id / "model.json"; }

  ActiveScorer load_scorer(const std::string& id) const {
    fs::path file = model_file(id);
    if (id.find('/') != std::string::npos || id.find("..") != std::string::npos || !fs::exists(file)) {
      if (!fs::is_regular_file(id)) throw NotFoundError("no model '" + id + "'");
      file = id;
    }
    ActiveScorer s{std::make_shared<Scorer>(load_model_file(file)), id, {}};
    const fs::path metrics = file.parent_path() / "metrics.json";
    if (fs::exists(metrics)) {
      std::ifstream in(metrics);
      const json m = json::parse(in);
      if (m.contains("importance")) {
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& [name, value] : m["importance"].items()) ranked.emplace_back(value.get<double>(), name);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i) s.top_features.push_back(ranked[i].second);
      }
    }
    return s;
  }

  // ---- scoring ------------------------------------------------------------

  struct PatientScore {
    std::optional<FeatureVector> features;
    double risk = 0.0;
  };

  std::vector<DailyMeasurement> rows_until(const std::string& id, Date day) const {
    std::vector<DailyMeasurement> rows;
    auto it = store.measurements().find(id);
    if (it == store.measurements().end()) return rows;
    auto r = it->second.lower_bound(day - kFeatureLookbackDays);
    for (; r != it->second.end() && r->first <= day; ++r) rows.push_back(r->second);
    return rows;
  }

  bool active_on(const std::string& id, Date day) const {
    const auto& rec = store.reviews().patients.at(id);
    if (rec.enrollment_date > day) return false;
    auto death = store.death_date(id);
    return !death || day < *death;
  }

  json worklist(Date day, std::size_t capacity) const {
    std::shared_lock lock(mutex);
    const Scorer& scorer = *active.scorer;
    std::map<std::string, double> scores;
    std::map<std::string, std::optional<FeatureVector>> features;
    for (const auto& [id, profile] : store.profiles()) {
      if (!active_on(id, day)) continue;
      auto fv = features_as_of(profile, rows_until(id, day), day);
      scores[id] = fv ? scorer.score(*fv) : 0.0;
      features[id] = std::move(fv);
    }
    const Worklist w = build_worklist(scores, store.reviews(), day, capacity, config.coverage_days);
    json j = hfrisk::to_json(w);
    for (auto& entry : j["entries"]) {
      const auto id = entry["patient_id"].get<std::string>();
      const auto& fv = features.at(id);
      entry["scored"] = fv.has_value();
      if (!fv) {
        entry["explanation"] = json::array();
      } else if (scorer.rules()) {
        entry["explanation"] = fired_rules(*scorer.rules(), *fv);
      } else {
        entry["explanation"] = active.top_features;
      }
    }
    j["scorer"] = scorer.kind();
    j["model_id"] = active.model_id ? json(*active.model_id) : json(nullptr);
    j["capacity"] = capacity;
    j["coverage_days"] = config.coverage_days;
    j["active_patients"] = scores.size();
    return j;
  }

  json timeline(const std::string& id) const {
    std::shared_lock lock(mutex);
    auto pit = store.profiles().find(id);
    if (pit == store.profiles().end()) throw NotFoundError("unknown patient_id " + id);
    const auto& rec = store.reviews().patients.at(id);
    json j{{"patient", hfrisk::to_json(pit->second)}, {"enrollment_date", rec.enrollment_date.iso()}};
    j["last_review_date"] = rec.last_review_date ? json(rec.last_review_date->iso()) : json(nullptr);

    json events = json::array();
    if (auto it = store.events().find(id); it != store.events().end()) {
      for (const auto& e : it->second) events.push_back(hfrisk::to_json(e));
    }
    j["events"] = events;

    std::vector<DailyMeasurement> rows;
    if (auto it = store.measurements().find(id); it != store.measurements().end()) {
      for (const auto& [d, m] : it->second) rows.push_back(m);
    }
    json measurements = json::array();
    for (const auto& m : rows) measurements.push_back(hfrisk::to_json(m));
    j["measurements"] = measurements;

    const auto tl = build_timeline(id, rows);
    std::set<int> observed_days;
    json days = json::array();
    for (std::size_t d = 0; d < tl.days(); ++d) {
      const Date day = tl.first_day + static_cast<int>(d);
      const DailyMeasurement* raw = nullptr;
      if (auto it = store.measurements().find(id); it != store.measurements().end()) {
        if (auto r = it->second.find(day); r != it->second.end()) raw = &r->second;
      }
      json values = json::object();
      json imputed = json::array();
      for (std::size_t f = 0; f < kDailyFieldCount; ++f) {
        const auto name = std::string(kFeatureNames[kDailyOffset + f]);
        const auto v = tl.fields[f][d];
        values[name] = v ? json(*v) : json(nullptr);
        const bool had = raw && raw_present(*raw, f);
        if (v && !had) imputed.push_back(name);
      }
      days.push_back({{"date", day.iso()}, {"values", values}, {"imputed", imputed}});
    }
    j["days"] = days;
    return j;
  }

  static bool raw_present(const DailyMeasurement& m, std::size_t field) {
    switch (field) {
      case 0: return m.weight_kg.has_value();
      case 1: return m.sys_bp_mmhg.has_value();
      case 2: return m.dia_bp_mmhg.has_value();
      case 3: return m.spo2_pct.has_value();
      case 4: return m.hr_bpm.has_value();
      case 5: return m.sinus_rhythm.has_value();
      case 6: return m.ventricular_tachycardia.has_value();
      case 7: return m.atrial_fibrillation.has_value();
      case 8: return m.wellbeing.has_value();
      case 9: return m.complaints.has_value();
    }
    return false;
  }

  // ---- writes -------------------------------------------------------------

  template <typename Parse, typename Write>
  ApiResponse ingest(const json& body, const char* what, Parse parse, Write write) {
    const auto items = items_of(body);
    if (items.empty()) throw ApiError(400, "bad_request", std::string("empty ") + what + " batch");
    using Item = decltype(parse(items.front()));
    std::vector<Item> parsed;
    for (std::size_t i = 0; i < items.size(); ++i) {
      try {
        parsed.push_back(parse(items[i]));
      } catch (const ValidationError& e) {
        const std::string where = body.is_array() ? std::string(what) + "[" + std::to_string(i) + "]: " : "";
        throw ApiError(422, "validation_error", where + e.what());
      }
    }
    json results = json::array();
    bool any_accepted = false;
    std::unique_lock lock(mutex);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      try {
        const auto outcome = write(parsed[i]);
        any_accepted |= outcome == WriteOutcome::accepted;
        results.push_back({{"status", to_string(outcome)}});
      } catch (const std::exception& e) {
        // Earlier items of the batch stay stored; report where it stopped.
        if (!body.is_array()) throw;
        const auto [status, code] = classify(e);
        throw ApiError(status, code, std::string(what) + "[" + std::to_string(i) + "]: " + e.what() +
                                         " (" + std::to_string(i) + " earlier items stored)");
      }
    }
    if (!body.is_array()) return {any_accepted ? 201 : 200, results[0]};
    return {any_accepted ? 201 : 200, json{{"results", results}}};
  }

  static std::pair<int, std::string> classify(const std::exception& e) {
    if (auto* api = dynamic_cast<const ApiError*>(&e)) return {api->status, api->code};
    if (dynamic_cast<const NotFoundError*>(&e)) return {404, "not_found"};
    if (dynamic_cast<const ConflictError*>(&e)) return {409, "conflict"};
    if (dynamic_cast<const ValidationError*>(&e)) return {422, "validation_error"};
    return {500, "internal"};
  }

  ApiResponse post_patients(const json& body) {
    const Date fallback = today();
    return ingest(
        body, "patients",
        [&](const json& j) {
          Date enrolled = fallback;
          if (j.is_object() && j.contains("enrollment_date")) {
            try {
              enrolled = Date::parse(j.at("enrollment_date").get<std::string>());
            } catch (const std::exception&) {
              throw ValidationError("field 'enrollment_date' must be YYYY-MM-DD");
            }
          }
          return std::pair{profile_from_json(j), enrolled};
        },
        [&](const std::pair<PatientProfile, Date>& p) { return store.add_profile(p.first, p.second); });
  }

  ApiResponse post_reviews(const json& body) {
    return ingest(
        body, "reviews",
        [&](const json& j) {
          if (!j.is_object() || !j.contains("patient_id") || !j["patient_id"].is_string()) {
            throw ValidationError("field 'patient_id' must be a string");
          }
          Date date = today();
          if (j.contains("date")) {
            try {
              date = Date::parse(j.at("date").get<std::string>());
            } catch (const std::exception&) {
              throw ValidationError("field 'date' must be YYYY-MM-DD");
            }
          }
          return std::pair{j["patient_id"].get<std::string>(), date};
        },
        [&](const std::pair<std::string, Date>& r) { return store.add_review(r.first, r.second); });
  }

  ApiResponse sim_advance(const json& body) {
    if (config.mode != ServiceMode::sim) throw ApiError(409, "not_sim_mode", "service is not in sim mode");
    int days = 1;
    if (body.is_object() && body.contains("days")) {
      if (!body["days"].is_number_integer() || body["days"].get<int>() < 1) {
        throw ApiError(422, "validation_error", "field 'days' must be a positive integer");
      }
      days = body["days"].get<int>();
    }
    std::unique_lock lock(mutex);
    store.set_clock(sim_today + days);
    sim_today = *store.clock();
    return {200, json{{"date", sim_today.iso()}}};
  }

  ApiResponse activate(const std::string& id) {
    if (!fs::exists(model_file(id))) throw NotFoundError("no model '" + id + "'");
    auto loaded = load_scorer(id);
    std::unique_lock lock(mutex);
    store.set_active_model(id);
    active = std::move(loaded);
    return {200, json{{"model_id", id}, {"scorer", "model"}}};
  }

  // ---- models -------------------------------------------------------------

  json list_models() const {
    json models = json::array();
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(models_dir)) {
      if (fs::exists(entry.path() / "model.json")) ids.push_back(entry.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
    std::shared_lock lock(mutex);
    for (const auto& id : ids) {
      json m{{"model_id", id}, {"active", active.model_id == id}};
      const auto metrics = models_dir / id / "metrics.json";
      if (fs::exists(metrics)) {
        std::ifstream in(metrics);
        const json summary = json::parse(in);
        m["aucroc"] = summary.value("aucroc", json(nullptr));
        m["aucpr"] = summary.value("aucpr", json(nullptr));
        m["job_id"] = summary.value("job_id", json(nullptr));
      }
      models.push_back(m);
    }
    json j{{"models", models}, {"scorer", active.scorer->kind()}};
    j["active"] = active.model_id ? json(*active.model_id) : json(nullptr);
    return j;
  }

  json model_metrics(const std::string& id) const {
    const auto metrics = models_dir / id / "metrics.json";
    if (id.find('/') != std::string::npos || id.find("..") != std::string::npos || !fs::exists(metrics)) {
      throw NotFoundError("no metrics for model '" + id + "'");
    }
    std::ifstream in(metrics);
    return json::parse(in);
  }

  // ---- training -----------------------------------------------------------

  ApiResponse submit(const json& body) {
    TrainConfig cfg;
    try {
      cfg = train_config_from_json(body.is_null() ? json::object() : body, config.experiment.train);
    } catch (const ValidationError& e) {
      throw ApiError(422, "validation_error", e.what());
    }
    std::lock_guard lock(jobs_mutex);
    TrainJob job;
    job.job_id = "job-" + std::to_string(++job_counter);
    job.config = cfg;
    jobs[job.job_id] = job;
    queue.push_back(job.job_id);
    jobs_cv.notify_all();
    return {202, to_json(job)};
  }

  json job_status(const std::string& id) {
    std::lock_guard lock(jobs_mutex);
    auto it = jobs.find(id);
    if (it == jobs.end()) throw NotFoundError("no job '" + id + "'");
    return to_json(it->second);
  }

  void work() {
    for (;;) {
      std::string id;
      TrainConfig cfg;
      {
        std::unique_lock lock(jobs_mutex);
        jobs_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
        jobs[id].status = JobStatus::running;
        cfg = jobs[id].config;
        busy = true;
      }
      std::optional<std::string> model_id;
      std::optional<std::string> error;
      try {
        model_id = train_job(id, cfg);
      } catch (const std::exception& e) {
        error = e.what();
      }
      {
        std::lock_guard lock(jobs_mutex);
        auto& job = jobs[id];
        job.status = model_id ? JobStatus::done : JobStatus::failed;
        job.model_id = model_id;
        job.error = error;
        busy = false;
      }
      jobs_cv.notify_all();
    }
  }

  std::string train_job(const std::string& job_id, const TrainConfig& cfg) {
    Cohort cohort;
    {
      std::shared_lock lock(mutex);
      cohort = store.cohort();
    }
    if (cohort.profiles.size() < 6) {
      throw std::runtime_error("insufficient data: need at least 6 patients, store has " +
                               std::to_string(cohort.profiles.size()));
    }
    ExperimentConfig exp = config.experiment;
    exp.train = cfg;
    const auto samples = assemble_samples(cohort, exp.label_horizon_days);
    const auto n_pos = std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.label; });
    if (n_pos == 0 || n_pos == static_cast<std::ptrdiff_t>(samples.size())) {
      throw std::runtime_error("insufficient data: " + std::to_string(samples.size()) + " samples, " +
                               std::to_string(n_pos) + " positive; both classes are required");
    }
    Experiment result;
    try {
      result = run_experiment(samples, exp);
    } catch (const ValidationError& e) {
      throw std::runtime_error(std::string("insufficient data: ") + e.what());
    }
    const auto& model = result.trained.model;
    const auto& test = result.data.raw.test;
    const MetricsReport report = evaluate_scores(score_samples(Scorer(model), test));
    const auto importance = permutation_importance(model, model.scaler, test, 3, cfg.seed);

    std::string id;
    {
      std::lock_guard lock(jobs_mutex);
      char buf[16];
      std::snprintf(buf, sizeof buf, "m-%04zu", ++model_counter);
      id = buf;
    }
    const fs::path dir = models_dir / id;
    const fs::path tmp = models_dir / ("." + id + ".tmp");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    save_model_file(tmp / "model.json", model, provenance_of(exp));
    write_report_dir(tmp / "metrics", report);
    json imp = json::object();
    for (std::size_t f = 0; f < importance.size(); ++f) imp[std::string(kFeatureNames[f])] = importance[f];
    json summary{{"model_id", id},
                 {"job_id", job_id},
                 {"aucroc", report.aucroc},
                 {"aucpr", report.aucpr},
                 {"n_pos", report.n_pos},
                 {"n_neg", report.n_neg},
                 {"selected_epoch", result.trained.history.selected_epoch},
                 {"best_validation_auc", result.trained.history.best_validation_auc()},
                 {"config", hfrisk::to_json(cfg)},
                 {"importance", imp}};
    {
      std::ofstream out(tmp / "metrics.json");
      out << summary.dump(1) << '\n';
    }
    fs::rename(tmp, dir);
    return id;
  }

  void wait_for_jobs() {
    std::unique_lock lock(jobs_mutex);
    jobs_cv.wait(lock, [&] { return stopping || (queue.empty() && !busy); });
  }

  // ---- routing ------------------------------------------------------------

  ApiResponse route(std::string_view method, std::string_view path,
                    const std::map<std::string, std::string>& query, const std::string& body) {
    if (!path.starts_with(kPrefix)) throw ApiError(404, "no_route", "no route for " + std::string(path));
    const auto seg = path_segments(path.substr(kPrefix.size()));
    const bool get = method == "GET";
    const bool post = method == "POST";
    auto param = [&](const char* name) -> std::optional<std::string> {
      auto it = query.find(name);
      if (it == query.end() || it->second.empty()) return std::nullopt;
      return it->second;
    };
    auto json_body = [&] { return body.empty() ? json(nullptr) : parse_body(body); };

    if (seg.size() == 1) {
      const auto& r = seg[0];
      if (r == "patients" && post) return post_patients(json_body());
      if (r == "measurements" && post) {
        return ingest(json_body(), "measurements", measurement_from_json,
                      [&](const DailyMeasurement& m) { return store.add_measurement(m); });
      }
      if (r == "events" && post) {
        return ingest(json_body(), "events", event_from_json,
                      [&](const ClinicalEvent& e) { return store.add_event(e); });
      }
      if (r == "reviews" && post) return post_reviews(json_body());
      if (r == "worklist" && get) {
        const Date day = param("date") ? parse_date_param(*param("date"), "date") : today();
        std::size_t capacity = config.capacity;
        if (auto c = param("capacity")) {
          auto n = text::parse_int(*c);
          if (!n || *n < 1) throw ApiError(400, "bad_request", "parameter 'capacity' must be a positive integer");
          capacity = static_cast<std::size_t>(*n);
        }
        return {200, worklist(day, capacity)};
      }
      if (r == "train" && post) return submit(json_body());
      if (r == "models" && get) return {200, list_models()};
      if (r == "status" && get) return {200, status()};
    }
    if (seg.size() == 2 && seg[0] == "jobs" && get) return {200, job_status(seg[1])};
    if (seg.size() == 2 && seg[0] == "sim" && seg[1] == "advance" && post) return sim_advance(json_body());
    if (seg.size() == 3 && seg[0] == "patients" && seg[2] == "timeline" && get) return {200, timeline(seg[1])};
    if (seg.size() == 3 && seg[0] == "models" && seg[2] == "metrics" && get) return {200, model_metrics(seg[1])};
    if (seg.size() == 3 && seg[0] == "models" && seg[2] == "activate" && post) return activate(seg[1]);
    throw ApiError(404, "no_route", "no route for " + std::string(method) + " " + std::string(path));
  }

  json status() const {
    const Date day = today();
    std::shared_lock lock(mutex);
    json j{{"mode", config.mode == ServiceMode::sim ? "sim" : "live"},
           {"today", day.iso()},
           {"scorer", active.scorer->kind()},
           {"patients", store.profiles().size()},
           {"records", store.record_count()},
           {"capacity", config.capacity},
           {"coverage_days", config.coverage_days}};
    j["model_id"] = active.model_id ? json(*active.model_id) : json(nullptr);
    return j;
  }

  ApiResponse handle(std::string_view method, std::string_view path,
                     const std::map<std::string, std::string>& query, const std::string& body) {
    try {
      return route(method, path, query, body);
    } catch (const std::exception& e) {
      const auto [status, code] = classify(e);
      return error_response(status, code, e.what());
    }
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() {
  stop();
}

int Service::bind() {
  if (impl_->bound_port >= 0) return impl_->bound_port;
  auto& server = impl_->server;
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const auto out = impl_->handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Get(".*", dispatch);
  server.Post(".*", dispatch);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    res.status = 500;
    res.set_content(json{{"code", "internal"}, {"message", "unhandled error"}}.dump(), "application/json");
  });
  const auto& cfg = impl_->config;
  int port = cfg.port;
  if (port == 0) {
    port = server.bind_to_any_port(cfg.host);
  } else if (!server.bind_to_port(cfg.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port) + " (port busy?)");
  }
  impl_->bound_port = port;
  return port;
}

void Service::run() {
  bind();
  impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
}

ApiResponse Service::handle(std::string_view method, std::string_view path,
                            const std::map<std::string, std::string>& query, const std::string& body) {
  return impl_->handle(method, path, query, body);
}

void Service::wait_for_jobs() { impl_->wait_for_jobs(); }

Date Service::today() const { return impl_->today(); }

}  // namespace hfrisk
