#include "hfrisk/cohort_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "hfrisk/error.hpp"
#include "hfrisk/random.hpp"
#include "hfrisk/text.hpp"

namespace hfrisk {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("cohort config: " + what);
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

// Log-scale event-rate modifiers. Each is applied with the prevalence below,
// so the cohort mean multiplier can be normalised to exactly 1.
struct RiskFactor {
  double prevalence;
  double log_effect;
};
constexpr RiskFactor kNyhaIII{0.5, 0.45};
constexpr RiskFactor kDiabetes{0.4, 0.25};
constexpr RiskFactor kAnxiety{0.2, 0.2};
constexpr RiskFactor kLivesAlone{0.3, 0.15};

double expected_multiplier() {
  double e = 1.0;
  for (const auto& f : {kNyhaIII, kDiabetes, kAnxiety, kLivesAlone}) {
    e *= 1.0 - f.prevalence + f.prevalence * std::exp(f.log_effect);
  }
  return e;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

// Daily outage state for one measuring device.
class Device {
 public:
  Device(double gap_prob, double mean_gap) : gap_prob_(gap_prob), mean_gap_(mean_gap) {}

  bool missing_today(Rng& rng) {
    if (remaining_ > 0) {
      --remaining_;
      return true;
    }
    if (gap_prob_ > 0.0 && rng.bernoulli(gap_prob_)) {
      int length = 1;
      const double extend = 1.0 - 1.0 / mean_gap_;
      while (rng.bernoulli(extend)) ++length;
      remaining_ = length - 1;
      return true;
    }
    return false;
  }

 private:
  double gap_prob_;
  double mean_gap_;
  int remaining_ = 0;
};

// AR(1) deviation with the given stationary standard deviation.
class Ar1 {
 public:
  Ar1(double phi, double sd, Rng& rng) : phi_(phi), innov_(sd * std::sqrt(1.0 - phi * phi)) {
    state_ = rng.normal(0.0, sd);
  }
  double step(Rng& rng) {
    state_ = phi_ * state_ + rng.normal(0.0, innov_);
    return state_;
  }

 private:
  double phi_;
  double innov_;
  double state_ = 0.0;
};

std::string patient_id(int index, int n) {
  const int width = std::max(4, static_cast<int>(std::to_string(std::max(n, 1)).size()));
  std::string digits = std::to_string(index + 1);
  return "P" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

void generate_patient(int index, const CohortConfig& cfg, double normaliser, Cohort& out) {
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  const auto& r = cfg.ranges;

  PatientProfile p;
  p.patient_id = patient_id(index, cfg.n_patients);
  p.age = static_cast<int>(std::clamp(std::round(rng.normal(70.0, 10.0)), 30.0, 95.0));
  p.gender = rng.bernoulli(0.7) ? Gender::male : Gender::female;
  p.nyha = rng.bernoulli(kNyhaIII.prevalence) ? NyhaClass::III : NyhaClass::II;
  p.lvef_pct = static_cast<double>(rng.between(15, 44));
  p.diabetes = rng.bernoulli(kDiabetes.prevalence);
  p.av_block = rng.bernoulli(0.15);
  p.lbbb = rng.bernoulli(0.25);
  p.lives_alone = rng.bernoulli(kLivesAlone.prevalence);
  p.anxiety = rng.bernoulli(kAnxiety.prevalence);

  double log_mult = 0.0;
  if (p.nyha == NyhaClass::III) log_mult += kNyhaIII.log_effect;
  if (p.diabetes) log_mult += kDiabetes.log_effect;
  if (p.anxiety) log_mult += kAnxiety.log_effect;
  if (p.lives_alone) log_mult += kLivesAlone.log_effect;
  const double event_p = std::min(1.0, cfg.daily_event_rate * std::exp(log_mult) / normaliser);

  const Date enrolled =
      cfg.start_date + (cfg.enrollment_spread_days > 0
                            ? static_cast<int>(rng.below(
                                  static_cast<std::uint64_t>(cfg.enrollment_spread_days)))
                            : 0);
  const int horizon = cfg.horizon_days;
  std::optional<int> death_day;
  if (rng.bernoulli(cfg.death_rate)) death_day = rng.between(std::min(10, horizon - 1), horizon - 1);
  const int last_day = death_day.value_or(horizon - 1);

  // Events and the precursor intensity they cast backwards in time.
  const auto& pc = cfg.precursor;
  std::vector<double> ramp(static_cast<std::size_t>(last_day) + 1, 0.0);
  for (int d = 0; d <= last_day; ++d) {
    std::optional<EventKind> kind;
    if (death_day && d == *death_day) {
      kind = EventKind::death;
    } else if (rng.bernoulli(event_p)) {
      kind = rng.bernoulli(cfg.hospitalization_share) ? EventKind::hospitalization
                                                      : EventKind::intervention;
    }
    if (!kind) continue;
    out.events.push_back({p.patient_id, enrolled + d, *kind});
    if (!rng.bernoulli(pc.signal_strength)) continue;
    for (int k = 0; k < pc.window_days && d - k >= 0; ++k) {
      const double f = static_cast<double>(pc.window_days - k) / pc.window_days;
      auto& slot = ramp[static_cast<std::size_t>(d - k)];
      slot = std::max(slot, f);
    }
  }

  // Per-patient baselines.
  const double weight_base = std::clamp(rng.normal(82.0, 15.0), r.weight_lo + 5.0, r.weight_hi - 10.0);
  const double sys_base = std::clamp(rng.normal(122.0, 14.0), 95.0, 160.0);
  const double dia_base = std::clamp(sys_base * 0.63 + rng.normal(0.0, 4.0), 55.0, 95.0);
  const double spo2_base = std::clamp(rng.normal(95.5, 1.2), 92.0, 99.0);
  const double hr_base = std::clamp(rng.normal(72.0, 9.0), 52.0, 100.0);
  const bool chronic_af = rng.bernoulli(0.25);
  const double u = rng.uniform();
  const int wellbeing_base = u < 0.3 ? 3 : (u < 0.8 ? 4 : 5);

  Ar1 weight_noise(0.75, 0.45, rng);
  Ar1 sys_noise(0.5, 7.0, rng);
  Ar1 dia_noise(0.5, 5.0, rng);
  Ar1 hr_noise(0.5, 5.0, rng);

  const auto& mc = cfg.missingness;
  Device scale(mc.scale_gap_prob, mc.mean_gap_days);
  Device bp(mc.bp_gap_prob, mc.mean_gap_days);
  Device oximeter(mc.oximeter_gap_prob, mc.mean_gap_days);
  Device ecg(mc.ecg_gap_prob, mc.mean_gap_days);
  Device tablet(mc.tablet_gap_prob, mc.mean_gap_days);

  for (int d = 0; d <= last_day; ++d) {
    const double f = ramp[static_cast<std::size_t>(d)];
    DailyMeasurement m;
    m.patient_id = p.patient_id;
    m.date = enrolled + d;

    const double weight =
        std::clamp(weight_base + weight_noise.step(rng) + f * pc.weight_ramp_kg, r.weight_lo, r.weight_hi);
    const double sys = std::clamp(sys_base + sys_noise.step(rng), r.sys_lo, r.sys_hi);
    double dia = std::clamp(dia_base + dia_noise.step(rng), r.dia_lo, r.dia_hi);
    dia = std::min(dia, std::round(sys) - 10.0);
    const double spo2 =
        std::clamp(spo2_base + rng.normal(0.0, 0.9) - f * pc.spo2_drop_pct, r.spo2_lo, r.spo2_hi);
    const double hr = std::clamp(hr_base + hr_noise.step(rng) + f * pc.hr_shift_bpm, r.hr_lo, r.hr_hi);
    const bool af = chronic_af ? !rng.bernoulli(0.02) : rng.bernoulli(0.01 + 0.08 * f);
    const bool vt = rng.bernoulli(0.003 + 0.02 * f);
    const double jitter = rng.uniform();
    int wellbeing = wellbeing_base + (jitter < 0.12 ? -1 : (jitter > 0.92 ? 1 : 0));
    wellbeing -= static_cast<int>(std::lround(f * pc.wellbeing_drop));
    wellbeing = std::clamp(wellbeing, 1, 5);
    const bool complaints = rng.bernoulli(0.04 + 0.5 * f);

    // Device outages are drawn every day so the random stream does not
    // depend on which readings end up missing.
    const bool no_scale = scale.missing_today(rng);
    const bool no_bp = bp.missing_today(rng);
    const bool no_oxi = oximeter.missing_today(rng);
    const bool no_ecg = ecg.missing_today(rng);
    const bool no_tablet = tablet.missing_today(rng);

    if (!no_scale) m.weight_kg = round_to(weight, 0.1);
    if (!no_bp) {
      m.sys_bp_mmhg = std::round(sys);
      m.dia_bp_mmhg = std::round(dia);
    }
    if (!no_oxi) m.spo2_pct = std::round(spo2);
    if (!no_ecg) {
      m.hr_bpm = std::round(hr);
      m.atrial_fibrillation = af;
      m.sinus_rhythm = !af && !vt;
      m.ventricular_tachycardia = vt;
    }
    if (!no_tablet) {
      m.wellbeing = wellbeing;
      m.complaints = complaints;
    }
    if (no_scale && no_bp && no_oxi && no_ecg && no_tablet) continue;
    out.measurements.push_back(std::move(m));
  }
  out.profiles.push_back(std::move(p));
}

// ---- config text ------------------------------------------------------------

struct ConfigKey {
  const char* name;
  std::function<std::string(const CohortConfig&)> get;
  std::function<bool(CohortConfig&, std::string_view)> set;
};

template <typename T>
ConfigKey number_key(const char* name, T CohortConfig::*member) {
  return {name,
          [member](const CohortConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return text::format_double(c.*member);
            else return std::to_string(c.*member);
          },
          [member](CohortConfig& c, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) {
              auto x = text::parse_double(v);
              if (!x) return false;
              c.*member = *x;
            } else {
              auto x = text::parse_int(v);
              if (!x || (std::is_unsigned_v<T> && *x < 0)) return false;
              c.*member = static_cast<T>(*x);
            }
            return true;
          }};
}

template <typename Sub, typename T>
ConfigKey nested_key(const char* name, Sub CohortConfig::*sub, T Sub::*member) {
  return {name,
          [sub, member](const CohortConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return text::format_double(c.*sub.*member);
            else return std::to_string(c.*sub.*member);
          },
          [sub, member](CohortConfig& c, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) {
              auto x = text::parse_double(v);
              if (!x) return false;
              c.*sub.*member = *x;
            } else {
              auto x = text::parse_int(v);
              if (!x) return false;
              c.*sub.*member = static_cast<T>(*x);
            }
            return true;
          }};
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      number_key("n_patients", &CohortConfig::n_patients),
      number_key("horizon_days", &CohortConfig::horizon_days),
      number_key("seed", &CohortConfig::seed),
      {"start_date", [](const CohortConfig& c) { return c.start_date.iso(); },
       [](CohortConfig& c, std::string_view v) {
         try {
           c.start_date = Date::parse(v);
           return true;
         } catch (const std::invalid_argument&) {
           return false;
         }
       }},
      number_key("enrollment_spread_days", &CohortConfig::enrollment_spread_days),
      number_key("daily_event_rate", &CohortConfig::daily_event_rate),
      number_key("hospitalization_share", &CohortConfig::hospitalization_share),
      number_key("death_rate", &CohortConfig::death_rate),
      nested_key("precursor.window_days", &CohortConfig::precursor, &PrecursorConfig::window_days),
      nested_key("precursor.weight_ramp_kg", &CohortConfig::precursor, &PrecursorConfig::weight_ramp_kg),
      nested_key("precursor.spo2_drop_pct", &CohortConfig::precursor, &PrecursorConfig::spo2_drop_pct),
      nested_key("precursor.wellbeing_drop", &CohortConfig::precursor, &PrecursorConfig::wellbeing_drop),
      nested_key("precursor.hr_shift_bpm", &CohortConfig::precursor, &PrecursorConfig::hr_shift_bpm),
      nested_key("precursor.signal_strength", &CohortConfig::precursor, &PrecursorConfig::signal_strength),
      nested_key("missingness.scale_gap_prob", &CohortConfig::missingness, &MissingnessConfig::scale_gap_prob),
      nested_key("missingness.bp_gap_prob", &CohortConfig::missingness, &MissingnessConfig::bp_gap_prob),
      nested_key("missingness.oximeter_gap_prob", &CohortConfig::missingness, &MissingnessConfig::oximeter_gap_prob),
      nested_key("missingness.ecg_gap_prob", &CohortConfig::missingness, &MissingnessConfig::ecg_gap_prob),
      nested_key("missingness.tablet_gap_prob", &CohortConfig::missingness, &MissingnessConfig::tablet_gap_prob),
      nested_key("missingness.mean_gap_days", &CohortConfig::missingness, &MissingnessConfig::mean_gap_days),
      nested_key("ranges.weight_lo", &CohortConfig::ranges, &PhysioRanges::weight_lo),
      nested_key("ranges.weight_hi", &CohortConfig::ranges, &PhysioRanges::weight_hi),
      nested_key("ranges.sys_lo", &CohortConfig::ranges, &PhysioRanges::sys_lo),
      nested_key("ranges.sys_hi", &CohortConfig::ranges, &PhysioRanges::sys_hi),
      nested_key("ranges.dia_lo", &CohortConfig::ranges, &PhysioRanges::dia_lo),
      nested_key("ranges.dia_hi", &CohortConfig::ranges, &PhysioRanges::dia_hi),
      nested_key("ranges.spo2_lo", &CohortConfig::ranges, &PhysioRanges::spo2_lo),
      nested_key("ranges.spo2_hi", &CohortConfig::ranges, &PhysioRanges::spo2_hi),
      nested_key("ranges.hr_lo", &CohortConfig::ranges, &PhysioRanges::hr_lo),
      nested_key("ranges.hr_hi", &CohortConfig::ranges, &PhysioRanges::hr_hi),
  };
  return keys;
}

}  // namespace

void validate(const CohortConfig& c) {
  require(c.n_patients >= 0, "n_patients must be >= 0");
  require(c.horizon_days >= 1, "horizon_days must be >= 1");
  require(c.enrollment_spread_days >= 0, "enrollment_spread_days must be >= 0");
  require(is_probability(c.daily_event_rate), "daily_event_rate must be in [0, 1]");
  require(is_probability(c.hospitalization_share), "hospitalization_share must be in [0, 1]");
  require(is_probability(c.death_rate), "death_rate must be in [0, 1]");
  const auto& p = c.precursor;
  require(p.window_days >= 1, "precursor.window_days must be >= 1");
  require(is_probability(p.signal_strength), "precursor.signal_strength must be in [0, 1]");
  require(std::isfinite(p.weight_ramp_kg) && std::isfinite(p.spo2_drop_pct) &&
              std::isfinite(p.wellbeing_drop) && std::isfinite(p.hr_shift_bpm),
          "precursor magnitudes must be finite");
  const auto& m = c.missingness;
  for (double g : {m.scale_gap_prob, m.bp_gap_prob, m.oximeter_gap_prob, m.ecg_gap_prob,
                   m.tablet_gap_prob}) {
    require(is_probability(g), "missingness gap probabilities must be in [0, 1]");
  }
  require(std::isfinite(m.mean_gap_days) && m.mean_gap_days >= 1.0,
          "missingness.mean_gap_days must be >= 1");
  const auto& r = c.ranges;
  // Generated values must also pass measurement validation.
  require(r.weight_lo >= 20.0 && r.weight_hi <= 300.0 && r.weight_lo + 20.0 < r.weight_hi,
          "weight range must lie in [20, 300]");
  require(r.sys_lo >= 40.0 && r.sys_hi <= 280.0 && r.sys_lo < r.sys_hi, "sys range must lie in [40, 280]");
  require(r.dia_lo >= 20.0 && r.dia_hi <= 200.0 && r.dia_lo < r.dia_hi, "dia range must lie in [20, 200]");
  require(r.dia_lo + 10.0 <= r.sys_lo, "dia_lo must be at least 10 below sys_lo");
  require(r.spo2_lo >= 50.0 && r.spo2_hi <= 100.0 && r.spo2_lo < r.spo2_hi, "spo2 range must lie in [50, 100]");
  require(r.hr_lo >= 20.0 && r.hr_hi <= 250.0 && r.hr_lo < r.hr_hi, "hr range must lie in [20, 250]");
}

CohortConfig parse_cohort_config(std::istream& in, const std::string& name) {
  CohortConfig c;
  std::unordered_map<std::string_view, const ConfigKey*> lookup;
  for (const auto& k : config_keys()) lookup.emplace(k.name, &k);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = line;
    if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = text::trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) throw ParseError(name, line_no, 1, "expected key = value");
    const auto key = text::trim(v.substr(0, eq));
    const auto value = text::trim(v.substr(eq + 1));
    auto it = lookup.find(key);
    if (it == lookup.end()) throw ParseError(name, line_no, 1, "unknown key '" + std::string(key) + "'");
    if (!it->second->set(c, value)) {
      throw ParseError(name, line_no, eq + 2, "invalid value for " + std::string(key));
    }
  }
  validate(c);
  return c;
}

void write_cohort_config(std::ostream& out, const CohortConfig& config) {
  for (const auto& k : config_keys()) out << k.name << " = " << k.get(config) << '\n';
}

Cohort generate_cohort(const CohortConfig& config) {
  validate(config);
  Cohort cohort;
  const double normaliser = expected_multiplier();
  for (int i = 0; i < config.n_patients; ++i) generate_patient(i, config, normaliser, cohort);
  return cohort;
}

CohortSummary summarize_cohort(const Cohort& cohort, int horizon_days) {
  CohortSummary s;
  s.patients = cohort.profiles.size();
  s.measurements = cohort.measurements.size();
  std::unordered_map<std::string, std::set<int>> event_days;
  for (const auto& e : cohort.events) {
    ++s.events[e.kind];
    if (e.kind == EventKind::death) ++s.deaths;
    event_days[e.patient_id].insert(e.date.serial());
  }
  std::size_t positive = 0;
  std::size_t missing = 0;
  for (const auto& m : cohort.measurements) {
    auto it = event_days.find(m.patient_id);
    if (it != event_days.end()) {
      auto lo = it->second.lower_bound(m.date.serial());
      if (lo != it->second.end() && *lo <= m.date.serial() + horizon_days) ++positive;
    }
    missing += !m.weight_kg + !m.sys_bp_mmhg + !m.dia_bp_mmhg + !m.spo2_pct + !m.hr_bpm +
               !m.sinus_rhythm + !m.ventricular_tachycardia + !m.atrial_fibrillation +
               !m.wellbeing + !m.complaints;
  }
  if (s.measurements > 0) {
    s.positive_day_rate = static_cast<double>(positive) / static_cast<double>(s.measurements);
    s.missing_rate = static_cast<double>(missing) /
                     static_cast<double>(s.measurements * kDailyFieldCount);
  }
  return s;
}

}  // namespace hfrisk
