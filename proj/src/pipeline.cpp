#include "hfrisk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hfrisk/error.hpp"
#include "hfrisk/random.hpp"
#include "hfrisk/text.hpp"

namespace hfrisk {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::intervention:
      return "intervention";
    case EventKind::hospitalization:
      return "hospitalization";
    case EventKind::death:
      return "death";
  }
  return "intervention";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  if (text == "intervention") return EventKind::intervention;
  if (text == "hospitalization") return EventKind::hospitalization;
  if (text == "death") return EventKind::death;
  return std::nullopt;
}

// ---- validation -------------------------------------------------------------

namespace {

struct Range {
  double lo;
  double hi;
};
constexpr Range kWeightRange{20.0, 300.0};
constexpr Range kSysRange{40.0, 280.0};
constexpr Range kDiaRange{20.0, 200.0};
constexpr Range kSpo2Range{50.0, 100.0};
constexpr Range kHrRange{20.0, 250.0};

// Returns an error message, or empty when the reading is acceptable.
std::string check_range(const char* field, const std::optional<double>& v, Range r) {
  if (!v) return {};
  if (!std::isfinite(*v) || *v < r.lo || *v > r.hi) {
    return std::string(field) + " " + text::format_double(*v) + " outside [" +
           text::format_double(r.lo) + ", " + text::format_double(r.hi) + "]";
  }
  return {};
}

std::string profile_problem(const PatientProfile& p) {
  if (p.patient_id.empty()) return "empty patient_id";
  if (p.age < 18) return "age must be >= 18";
  if (!std::isfinite(p.lvef_pct) || p.lvef_pct < 0.0 || p.lvef_pct >= 45.0) {
    return "lvef_pct must be in [0, 45)";
  }
  return {};
}

// Column (1-based, in measurements.csv order) and message of the first problem.
std::pair<std::size_t, std::string> measurement_problem(const DailyMeasurement& m) {
  if (auto e = check_range("weight_kg", m.weight_kg, kWeightRange); !e.empty()) return {3, e};
  if (auto e = check_range("sys_bp_mmhg", m.sys_bp_mmhg, kSysRange); !e.empty()) return {4, e};
  if (auto e = check_range("dia_bp_mmhg", m.dia_bp_mmhg, kDiaRange); !e.empty()) return {5, e};
  if (m.sys_bp_mmhg && m.dia_bp_mmhg && !(*m.dia_bp_mmhg < *m.sys_bp_mmhg)) {
    return {5, "dia_bp_mmhg must be below sys_bp_mmhg"};
  }
  if (auto e = check_range("spo2_pct", m.spo2_pct, kSpo2Range); !e.empty()) return {6, e};
  if (auto e = check_range("hr_bpm", m.hr_bpm, kHrRange); !e.empty()) return {7, e};
  if (m.wellbeing && (*m.wellbeing < 1 || *m.wellbeing > 5)) {
    return {11, "wellbeing must be in 1..5"};
  }
  return {0, {}};
}

}  // namespace

void validate(const PatientProfile& profile) {
  if (auto e = profile_problem(profile); !e.empty()) {
    throw ValidationError("profile " + profile.patient_id + ": " + e);
  }
}

void validate(const DailyMeasurement& m) {
  if (auto [col, e] = measurement_problem(m); !e.empty()) {
    throw ValidationError("measurement " + m.patient_id + " " + m.date.iso() + ": " + e);
  }
}

void validate(const Cohort& cohort) {
  std::unordered_set<std::string> ids;
  for (const auto& p : cohort.profiles) {
    validate(p);
    if (!ids.insert(p.patient_id).second) {
      throw ValidationError("duplicate patient_id " + p.patient_id);
    }
  }
  std::set<std::pair<std::string, int>> seen;
  for (const auto& m : cohort.measurements) {
    if (!ids.contains(m.patient_id)) throw ValidationError("unknown patient_id " + m.patient_id);
    validate(m);
    if (!seen.emplace(m.patient_id, m.date.serial()).second) {
      throw ValidationError("duplicate measurement for " + m.patient_id + " on " + m.date.iso());
    }
  }
  std::unordered_map<std::string, Date> deaths;
  for (const auto& e : cohort.events) {
    if (!ids.contains(e.patient_id)) throw ValidationError("unknown patient_id " + e.patient_id);
    if (e.kind == EventKind::death && !deaths.emplace(e.patient_id, e.date).second) {
      throw ValidationError("more than one death event for " + e.patient_id);
    }
  }
  for (const auto& e : cohort.events) {
    auto it = deaths.find(e.patient_id);
    if (it != deaths.end() && e.date > it->second) {
      throw ValidationError("event after death for " + e.patient_id + " on " + e.date.iso());
    }
  }
}

// ---- CSV parsing ------------------------------------------------------------

namespace {

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string name, std::string_view header)
      : in_(in), name_(std::move(name)) {
    std::string line;
    if (!std::getline(in_, line)) fail(1, 1, "missing header");
    line_no_ = 1;
    if (text::trim(line) != header) {
      fail(1, 1, "expected header '" + std::string(header) + "'");
    }
    expected_fields_ = text::split(header).size();
  }

  // Next non-blank record; false at end of input.
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      if (text::trim(line_).empty()) continue;
      fields = text::split(line_);
      if (fields.size() != expected_fields_) {
        fail(line_no_, std::min(fields.size(), expected_fields_) + 1,
             "expected " + std::to_string(expected_fields_) + " fields, got " +
                 std::to_string(fields.size()));
      }
      for (auto& f : fields) f = text::trim(f);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::size_t line, std::size_t column, const std::string& what) const {
    throw ParseError(name_, line, column, what);
  }
  [[noreturn]] void fail(std::size_t column, const std::string& what) const {
    fail(line_no_, column, what);
  }

  std::size_t line() const { return line_no_; }

  double number(std::string_view s, std::size_t column) const {
    auto v = text::parse_double(s);
    if (!v || !std::isfinite(*v)) fail(column, "invalid number '" + std::string(s) + "'");
    return *v;
  }
  std::optional<double> optional_number(std::string_view s, std::size_t column) const {
    if (s.empty()) return std::nullopt;
    return number(s, column);
  }
  bool flag(std::string_view s, std::size_t column) const {
    if (s == "0") return false;
    if (s == "1") return true;
    fail(column, "expected 0 or 1, got '" + std::string(s) + "'");
  }
  std::optional<bool> optional_flag(std::string_view s, std::size_t column) const {
    if (s.empty()) return std::nullopt;
    return flag(s, column);
  }
  Date date(std::string_view s, std::size_t column) const {
    try {
      return Date::parse(s);
    } catch (const std::invalid_argument& e) {
      fail(column, e.what());
    }
  }

 private:
  std::istream& in_;
  std::string name_;
  std::string line_;
  std::size_t line_no_ = 0;
  std::size_t expected_fields_ = 0;
};

}  // namespace

Cohort parse_cohort(std::istream& profiles, std::istream& measurements, std::istream& events,
                    const std::array<std::string, 3>& names) {
  Cohort cohort;
  std::vector<std::string_view> f;
  std::unordered_set<std::string> ids;

  CsvReader pr(profiles, names[0], kProfilesHeader);
  while (pr.next(f)) {
    PatientProfile p;
    p.patient_id = std::string(f[0]);
    if (p.patient_id.empty()) pr.fail(1, "empty patient_id");
    auto age = text::parse_int(f[1]);
    if (!age) pr.fail(2, "invalid age '" + std::string(f[1]) + "'");
    if (*age < 18 || *age > 130) pr.fail(2, "age must be in [18, 130]");
    p.age = static_cast<int>(*age);
    if (f[2] == "F") {
      p.gender = Gender::female;
    } else if (f[2] == "M") {
      p.gender = Gender::male;
    } else {
      pr.fail(3, "gender must be F or M");
    }
    if (f[3] == "II") {
      p.nyha = NyhaClass::II;
    } else if (f[3] == "III") {
      p.nyha = NyhaClass::III;
    } else {
      pr.fail(4, "nyha must be II or III");
    }
    p.lvef_pct = pr.number(f[4], 5);
    if (p.lvef_pct < 0.0 || p.lvef_pct >= 45.0) pr.fail(5, "lvef_pct must be in [0, 45)");
    p.diabetes = pr.flag(f[5], 6);
    p.av_block = pr.flag(f[6], 7);
    p.lbbb = pr.flag(f[7], 8);
    p.lives_alone = pr.flag(f[8], 9);
    p.anxiety = pr.flag(f[9], 10);
    if (!ids.insert(p.patient_id).second) pr.fail(1, "duplicate patient_id " + p.patient_id);
    cohort.profiles.push_back(std::move(p));
  }

  CsvReader mr(measurements, names[1], kMeasurementsHeader);
  std::map<std::pair<std::string, int>, std::size_t> seen;
  while (mr.next(f)) {
    DailyMeasurement m;
    m.patient_id = std::string(f[0]);
    if (!ids.contains(m.patient_id)) mr.fail(1, "unknown patient_id '" + m.patient_id + "'");
    m.date = mr.date(f[1], 2);
    m.weight_kg = mr.optional_number(f[2], 3);
    m.sys_bp_mmhg = mr.optional_number(f[3], 4);
    m.dia_bp_mmhg = mr.optional_number(f[4], 5);
    m.spo2_pct = mr.optional_number(f[5], 6);
    m.hr_bpm = mr.optional_number(f[6], 7);
    m.sinus_rhythm = mr.optional_flag(f[7], 8);
    m.ventricular_tachycardia = mr.optional_flag(f[8], 9);
    m.atrial_fibrillation = mr.optional_flag(f[9], 10);
    if (!f[10].empty()) {
      auto w = text::parse_int(f[10]);
      if (!w) mr.fail(11, "invalid wellbeing '" + std::string(f[10]) + "'");
      m.wellbeing = static_cast<int>(*w);
    }
    m.complaints = mr.optional_flag(f[11], 12);
    if (auto [col, e] = measurement_problem(m); !e.empty()) mr.fail(col, e);
    auto [it, inserted] = seen.emplace(std::pair{m.patient_id, m.date.serial()}, mr.line());
    if (!inserted) {
      mr.fail(1, "duplicate measurement for " + m.patient_id + " on " + m.date.iso() +
                     " (first at line " + std::to_string(it->second) + ")");
    }
    cohort.measurements.push_back(std::move(m));
  }

  CsvReader er(events, names[2], kEventsHeader);
  std::unordered_map<std::string, Date> deaths;
  std::unordered_map<std::string, Date> latest;
  while (er.next(f)) {
    ClinicalEvent e;
    e.patient_id = std::string(f[0]);
    if (!ids.contains(e.patient_id)) er.fail(1, "unknown patient_id '" + e.patient_id + "'");
    e.date = er.date(f[1], 2);
    auto kind = parse_event_kind(f[2]);
    if (!kind) er.fail(3, "unknown event kind '" + std::string(f[2]) + "'");
    e.kind = *kind;
    if (auto d = deaths.find(e.patient_id); d != deaths.end() && e.date > d->second) {
      er.fail(2, "event after death of " + e.patient_id);
    }
    if (e.kind == EventKind::death) {
      if (deaths.contains(e.patient_id)) er.fail(3, "second death event for " + e.patient_id);
      if (auto l = latest.find(e.patient_id); l != latest.end() && l->second > e.date) {
        er.fail(2, "death precedes an earlier-listed event of " + e.patient_id);
      }
      deaths.emplace(e.patient_id, e.date);
    }
    auto& l = latest[e.patient_id];
    l = std::max(l, e.date);
    cohort.events.push_back(std::move(e));
  }
  return cohort;
}

Cohort parse_cohort(const std::filesystem::path& profiles_file,
                    const std::filesystem::path& measurements_file,
                    const std::filesystem::path& events_file) {
  auto open = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return in;
  };
  auto p = open(profiles_file);
  auto m = open(measurements_file);
  auto e = open(events_file);
  return parse_cohort(p, m, e,
                      {profiles_file.string(), measurements_file.string(), events_file.string()});
}

Cohort load_cohort_dir(const std::filesystem::path& dir) {
  return parse_cohort(dir / "profiles.csv", dir / "measurements.csv", dir / "events.csv");
}

// ---- CSV writing ------------------------------------------------------------

namespace {

std::string opt(const std::optional<double>& v) { return v ? text::format_double(*v) : ""; }
std::string opt(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : ""; }
std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

void write_profiles(std::ostream& out, const std::vector<PatientProfile>& profiles) {
  out << kProfilesHeader << '\n';
  for (const auto& p : profiles) {
    out << p.patient_id << ',' << p.age << ',' << (p.gender == Gender::male ? "M" : "F") << ','
        << (p.nyha == NyhaClass::III ? "III" : "II") << ',' << text::format_double(p.lvef_pct)
        << ',' << p.diabetes << ',' << p.av_block << ',' << p.lbbb << ',' << p.lives_alone << ','
        << p.anxiety << '\n';
  }
}

void write_measurements(std::ostream& out, const std::vector<DailyMeasurement>& measurements) {
  out << kMeasurementsHeader << '\n';
  for (const auto& m : measurements) {
    out << m.patient_id << ',' << m.date.iso() << ',' << opt(m.weight_kg) << ','
        << opt(m.sys_bp_mmhg) << ',' << opt(m.dia_bp_mmhg) << ',' << opt(m.spo2_pct) << ','
        << opt(m.hr_bpm) << ',' << opt(m.sinus_rhythm) << ',' << opt(m.ventricular_tachycardia)
        << ',' << opt(m.atrial_fibrillation) << ',' << opt(m.wellbeing) << ','
        << opt(m.complaints) << '\n';
  }
}

void write_events(std::ostream& out, const std::vector<ClinicalEvent>& events) {
  out << kEventsHeader << '\n';
  for (const auto& e : events) {
    out << e.patient_id << ',' << e.date.iso() << ',' << to_string(e.kind) << '\n';
  }
}

void write_cohort_dir(const std::filesystem::path& dir, const Cohort& cohort) {
  std::filesystem::create_directories(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };
  auto p = open(dir / "profiles.csv");
  write_profiles(p, cohort.profiles);
  auto m = open(dir / "measurements.csv");
  write_measurements(m, cohort.measurements);
  auto e = open(dir / "events.csv");
  write_events(e, cohort.events);
}

// ---- imputation ------------------------------------------------------------

Series impute_series(const Series& values) {
  Series out = values;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    if (prev) {
      const std::size_t gap = i - *prev - 1;
      if (gap >= 1 && gap <= static_cast<std::size_t>(kMaxImputedGap)) {
        const double a = *values[*prev];
        const double b = *values[i];
        const double span = static_cast<double>(i - *prev);
        for (std::size_t k = *prev + 1; k < i; ++k) {
          out[k] = a + (b - a) * static_cast<double>(k - *prev) / span;
        }
      }
    }
    prev = i;
  }
  return out;
}

std::optional<double> PatientTimeline::at(std::size_t field, Date day) const {
  const int offset = day - first_day;
  if (offset < 0 || static_cast<std::size_t>(offset) >= days()) return std::nullopt;
  return fields[field][static_cast<std::size_t>(offset)];
}

PatientTimeline build_timeline(std::string patient_id,
                               const std::vector<DailyMeasurement>& measurements) {
  PatientTimeline tl;
  tl.patient_id = std::move(patient_id);
  if (measurements.empty()) return tl;
  auto [lo, hi] = std::minmax_element(
      measurements.begin(), measurements.end(),
      [](const DailyMeasurement& a, const DailyMeasurement& b) { return a.date < b.date; });
  tl.first_day = lo->date;
  const auto n = static_cast<std::size_t>(hi->date - lo->date + 1);
  for (auto& s : tl.fields) s.assign(n, std::nullopt);

  auto as_num = [](const std::optional<bool>& b) -> std::optional<double> {
    if (!b) return std::nullopt;
    return *b ? 1.0 : 0.0;
  };
  for (const auto& m : measurements) {
    const auto i = static_cast<std::size_t>(m.date - tl.first_day);
    tl.fields[0][i] = m.weight_kg;
    tl.fields[1][i] = m.sys_bp_mmhg;
    tl.fields[2][i] = m.dia_bp_mmhg;
    tl.fields[3][i] = m.spo2_pct;
    tl.fields[4][i] = m.hr_bpm;
    tl.fields[5][i] = as_num(m.sinus_rhythm);
    tl.fields[6][i] = as_num(m.ventricular_tachycardia);
    tl.fields[7][i] = as_num(m.atrial_fibrillation);
    if (m.wellbeing) tl.fields[8][i] = static_cast<double>(*m.wellbeing);
    tl.fields[9][i] = as_num(m.complaints);
  }
  for (auto& s : tl.fields) s = impute_series(s);
  return tl;
}

// ---- samples ----------------------------------------------------------------

void encode_profile(const PatientProfile& p, FeatureVector& out) {
  out[index_of(Feature::age)] = p.age;
  out[index_of(Feature::gender)] = p.gender == Gender::male ? 1.0 : 0.0;
  out[index_of(Feature::diabetes)] = p.diabetes;
  out[index_of(Feature::nyha)] = p.nyha == NyhaClass::III ? 1.0 : 0.0;
  out[index_of(Feature::lvef_pct)] = p.lvef_pct;
  out[index_of(Feature::av_block)] = p.av_block;
  out[index_of(Feature::lbbb)] = p.lbbb;
  out[index_of(Feature::lives_alone)] = p.lives_alone;
  out[index_of(Feature::anxiety)] = p.anxiety;
}

std::optional<FeatureVector> build_features(const PatientProfile& profile,
                                            const PatientTimeline& timeline, Date t) {
  FeatureVector x(kFeatureCount, 0.0);
  encode_profile(profile, x);
  constexpr std::size_t kFirstDaily = index_of(Feature::weight_kg);
  for (std::size_t f = 0; f < kDailyFieldCount; ++f) {
    auto v = timeline.at(f, t);
    if (!v) return std::nullopt;
    x[kFirstDaily + f] = *v;
  }
  const double weight = x[index_of(Feature::weight_kg)];
  constexpr std::array<std::pair<int, Feature>, 3> kDiffs = {
      std::pair{1, Feature::weight_diff_1d}, std::pair{3, Feature::weight_diff_3d},
      std::pair{8, Feature::weight_diff_8d}};
  for (const auto& [lag, feature] : kDiffs) {
    auto past = timeline.at(0, t - lag);
    if (!past) return std::nullopt;
    x[index_of(feature)] = weight - *past;
  }
  for (double v : x) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return x;
}

std::optional<FeatureVector> features_as_of(const PatientProfile& profile,
                                            const std::vector<DailyMeasurement>& rows, Date t) {
  std::vector<DailyMeasurement> window;
  for (const auto& m : rows) {
    if (m.date <= t && m.date >= t - kFeatureLookbackDays) window.push_back(m);
  }
  if (window.empty()) return std::nullopt;
  return build_features(profile, build_timeline(profile.patient_id, window), t);
}

bool label_for(const std::vector<ClinicalEvent>& patient_events, Date t, int horizon_days) {
  const Date end = t + horizon_days;
  return std::any_of(patient_events.begin(), patient_events.end(),
                     [&](const ClinicalEvent& e) { return e.date >= t && e.date <= end; });
}

std::optional<LabeledSample> build_sample(const PatientProfile& profile,
                                          const PatientTimeline& timeline,
                                          const std::vector<ClinicalEvent>& patient_events,
                                          Date t, int horizon_days) {
  auto x = build_features(profile, timeline, t);
  if (!x) return std::nullopt;
  return LabeledSample{profile.patient_id, t, std::move(*x),
                       label_for(patient_events, t, horizon_days)};
}

std::vector<LabeledSample> assemble_samples(const Cohort& cohort, int horizon_days) {
  if (horizon_days < 0) throw ValidationError("label horizon must be >= 0");
  std::unordered_map<std::string, std::vector<DailyMeasurement>> by_patient;
  for (const auto& m : cohort.measurements) by_patient[m.patient_id].push_back(m);
  std::unordered_map<std::string, std::vector<ClinicalEvent>> events;
  for (const auto& e : cohort.events) events[e.patient_id].push_back(e);

  static const std::vector<ClinicalEvent> kNoEvents;
  std::vector<LabeledSample> samples;
  for (const auto& profile : cohort.profiles) {
    auto mit = by_patient.find(profile.patient_id);
    if (mit == by_patient.end()) continue;
    const auto timeline = build_timeline(profile.patient_id, mit->second);
    auto eit = events.find(profile.patient_id);
    const auto& pe = eit == events.end() ? kNoEvents : eit->second;
    for (Date t = timeline.first_day + 8; t <= timeline.last_day(); t += 1) {
      if (auto s = build_sample(profile, timeline, pe, t, horizon_days)) {
        samples.push_back(std::move(*s));
      }
    }
  }
  return samples;
}

// ---- scaler -----------------------------------------------------------------

void Scaler::apply(FeatureVector& x) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = stddev[i] > 0.0 ? (x[i] - mean[i]) / stddev[i] : 0.0;
  }
}

FeatureVector Scaler::transform(const FeatureVector& x) const {
  FeatureVector y = x;
  apply(y);
  return y;
}

Scaler fit_scaler(const std::vector<LabeledSample>& samples) {
  Scaler s;
  if (samples.empty()) return s;
  const std::size_t d = samples.front().features.size();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  const double n = static_cast<double>(samples.size());
  for (const auto& x : samples) {
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += x.features[i];
  }
  for (auto& m : s.mean) m /= n;
  for (const auto& x : samples) {
    for (std::size_t i = 0; i < d; ++i) {
      const double c = x.features[i] - s.mean[i];
      s.stddev[i] += c * c;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    s.stddev[i] = std::sqrt(s.stddev[i] / n);
    // Constant columns can leave rounding residue; treat them as exactly 0.
    if (s.stddev[i] <= 1e-12 * std::max(1.0, std::abs(s.mean[i]))) s.stddev[i] = 0.0;
  }
  return s;
}

// ---- split ------------------------------------------------------------------

DatasetSplit split_by_patient(const std::vector<LabeledSample>& samples, std::uint64_t seed) {
  struct PatientStats {
    std::string id;
    std::size_t n_samples = 0;
    std::size_t n_pos = 0;
    std::uint64_t tiebreak = 0;
  };
  std::vector<PatientStats> patients;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : samples) {
    auto [it, inserted] = index.emplace(s.patient_id, patients.size());
    if (inserted) patients.push_back({s.patient_id});
    auto& p = patients[it->second];
    ++p.n_samples;
    p.n_pos += s.label ? 1 : 0;
  }
  const std::size_t n = patients.size();
  if (n < kMinSplitPatients) {
    throw ValidationError("split needs at least 6 patients, got " + std::to_string(n));
  }

  Rng rng(mix_seed(seed, 0x5117));
  for (auto& p : patients) p.tiebreak = rng.next() ^ fnv1a(p.id);
  std::sort(patients.begin(), patients.end(), [](const PatientStats& a, const PatientStats& b) {
    if (a.n_pos != b.n_pos) return a.n_pos < b.n_pos;
    if (a.n_samples != b.n_samples) return a.n_samples < b.n_samples;
    if (a.tiebreak != b.tiebreak) return a.tiebreak < b.tiebreak;
    return a.id < b.id;
  });

  // Target sizes: validation and test get round(n/6) patients each.
  const auto sixth = static_cast<std::size_t>(std::llround(static_cast<double>(n) / 6.0));
  const std::size_t blocks = n / 6;
  const std::size_t remainder = n % 6;
  const std::size_t val_rest = sixth - blocks;
  const std::size_t test_rest = sixth - blocks;
  if (val_rest + test_rest > remainder || sixth == 0) {
    throw ValidationError("split would leave a set without patients");
  }

  enum Slot : std::uint8_t { kTrain, kVal, kTest };
  std::unordered_map<std::string, Slot> assignment;
  for (std::size_t b = 0; b * 6 < n; ++b) {
    std::vector<Slot> slots;
    if (b < blocks) {
      slots = {kTrain, kTrain, kTrain, kTrain, kVal, kTest};
    } else {
      slots.assign(remainder - val_rest - test_rest, kTrain);
      slots.insert(slots.end(), val_rest, kVal);
      slots.insert(slots.end(), test_rest, kTest);
    }
    rng.shuffle(std::span<Slot>(slots));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      assignment.emplace(patients[b * 6 + k].id, slots[k]);
    }
  }

  DatasetSplit split;
  for (const auto& s : samples) {
    switch (assignment.at(s.patient_id)) {
      case kTrain:
        split.train.push_back(s);
        break;
      case kVal:
        split.validation.push_back(s);
        break;
      case kTest:
        split.test.push_back(s);
        break;
    }
  }
  split.scaler = fit_scaler(split.train);
  return split;
}

std::vector<LabeledSample> oversample_minority(const std::vector<LabeledSample>& train,
                                               std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < train.size(); ++i) (train[i].label ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) {
    throw ValidationError("oversampling needs samples of both classes");
  }
  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
  std::vector<LabeledSample> out = train;
  out.reserve(train.size() + deficit);
  Rng rng(mix_seed(seed, 0x0e5a));
  for (std::size_t k = 0; k < deficit; ++k) {
    out.push_back(train[minority[rng.below(minority.size())]]);
  }
  return out;
}

DatasetSplit standardize(const DatasetSplit& split) {
  if (split.scaler.empty()) throw ValidationError("standardize needs a fitted scaler");
  DatasetSplit out = split;
  for (auto* set : {&out.train, &out.validation, &out.test}) {
    for (auto& s : *set) split.scaler.apply(s.features);
  }
  return out;
}

// ---- split serialization -------------------------------------------------

void write_samples(std::ostream& out, const std::vector<LabeledSample>& samples) {
  out << "patient_id,date,label";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  for (const auto& s : samples) {
    out << s.patient_id << ',' << s.date.iso() << ',' << (s.label ? 1 : 0);
    for (double v : s.features) out << ',' << text::format_double(v);
    out << '\n';
  }
}

std::vector<LabeledSample> read_samples(std::istream& in, const std::string& name) {
  std::string header = "patient_id,date,label";
  for (auto f : kFeatureNames) header += "," + std::string(f);
  CsvReader r(in, name, header);
  std::vector<LabeledSample> out;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    LabeledSample s;
    s.patient_id = std::string(f[0]);
    s.date = r.date(f[1], 2);
    s.label = r.flag(f[2], 3);
    s.features.resize(kFeatureCount);
    for (std::size_t i = 0; i < kFeatureCount; ++i) s.features[i] = r.number(f[3 + i], 4 + i);
    out.push_back(std::move(s));
  }
  return out;
}

void write_scaler(std::ostream& out, const Scaler& scaler) {
  out << "feature,mean,std\n";
  for (std::size_t i = 0; i < scaler.mean.size(); ++i) {
    out << kFeatureNames[i] << ',' << text::format_double(scaler.mean[i]) << ','
        << text::format_double(scaler.stddev[i]) << '\n';
  }
}

Scaler read_scaler(std::istream& in, const std::string& name) {
  CsvReader r(in, name, "feature,mean,std");
  Scaler s;
  std::vector<std::string_view> f;
  while (r.next(f)) {
    const std::size_t i = s.mean.size();
    if (i >= kFeatureCount || f[0] != kFeatureNames[i]) {
      r.fail(1, "unexpected feature '" + std::string(f[0]) + "'");
    }
    s.mean.push_back(r.number(f[1], 2));
    s.stddev.push_back(r.number(f[2], 3));
  }
  if (s.mean.size() != kFeatureCount) r.fail(1, "scaler lists fewer features than the schema");
  return s;
}

void write_split_dir(const std::filesystem::path& dir, const DatasetSplit& split) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* file, auto&& fn) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    fn(out);
  };
  write("train.csv", [&](std::ostream& o) { write_samples(o, split.train); });
  write("validation.csv", [&](std::ostream& o) { write_samples(o, split.validation); });
  write("test.csv", [&](std::ostream& o) { write_samples(o, split.test); });
  write("scaler.csv", [&](std::ostream& o) { write_scaler(o, split.scaler); });
}

DatasetSplit read_split_dir(const std::filesystem::path& dir) {
  auto open = [&](const char* file) {
    std::ifstream in(dir / file);
    if (!in) throw std::runtime_error("cannot open " + (dir / file).string());
    return in;
  };
  DatasetSplit split;
  auto tr = open("train.csv");
  split.train = read_samples(tr, (dir / "train.csv").string());
  auto va = open("validation.csv");
  split.validation = read_samples(va, (dir / "validation.csv").string());
  auto te = open("test.csv");
  split.test = read_samples(te, (dir / "test.csv").string());
  auto sc = open("scaler.csv");
  split.scaler = read_scaler(sc, (dir / "scaler.csv").string());
  return split;
}

}  // namespace hfrisk
