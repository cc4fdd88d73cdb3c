#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "hfrisk/date.hpp"
#include "hfrisk/pipeline.hpp"

namespace hfrisk {

/// Vital-sign changes injected over the days leading up to an event.
struct PrecursorConfig {
  int window_days = 7;
  double weight_ramp_kg = 2.0;
  double spo2_drop_pct = 3.0;
  double wellbeing_drop = 2.0;
  double hr_shift_bpm = 15.0;
  /// Fraction of events preceded by a ramp.
  double signal_strength = 0.8;
};

/// Per-device outages. A device misses a day with probability
/// `gap_start_prob`; the outage length is 1 + Geometric(1 / mean extra).
struct MissingnessConfig {
  double scale_gap_prob = 0.03;     // weight
  double bp_gap_prob = 0.03;        // sys, dia
  double oximeter_gap_prob = 0.03;  // spo2
  double ecg_gap_prob = 0.03;       // hr, rhythm flags
  double tablet_gap_prob = 0.03;    // wellbeing, complaints
  double mean_gap_days = 1.6;
};

/// Clamp bounds for generated vitals.
struct PhysioRanges {
  double weight_lo = 40.0, weight_hi = 200.0;
  double sys_lo = 80.0, sys_hi = 200.0;
  double dia_lo = 40.0, dia_hi = 120.0;
  double spo2_lo = 80.0, spo2_hi = 100.0;
  double hr_lo = 35.0, hr_hi = 160.0;
};

struct CohortConfig {
  int n_patients = 763;
  int horizon_days = 365;
  std::uint64_t seed = 1;
  Date start_date = Date::from_ymd(2014, 1, 1);
  /// Enrollment is staggered uniformly over this many days.
  int enrollment_spread_days = 60;
  /// Mean per-day probability of a clinical event.
  double daily_event_rate = 0.02;
  /// Share of non-death events that are hospitalizations (387 of 4716).
  double hospitalization_share = 387.0 / (387.0 + 4329.0);
  /// Probability that a patient dies within the horizon.
  double death_rate = 100.0 / 763.0;
  PrecursorConfig precursor;
  MissingnessConfig missingness;
  PhysioRanges ranges;
};

/// Throws ValidationError on out-of-range fields.
void validate(const CohortConfig& config);

/// Flat `key = value` text; `#` starts a comment. Unknown keys are errors.
CohortConfig parse_cohort_config(std::istream& in, const std::string& name = "cohort-config");
void write_cohort_config(std::ostream& out, const CohortConfig& config);

/// Deterministic given config.seed. Patient i draws from its own derived
/// seed, so generating a larger cohort keeps the first patients unchanged.
Cohort generate_cohort(const CohortConfig& config);

struct CohortSummary {
  std::size_t patients = 0;
  std::size_t measurements = 0;
  std::map<EventKind, std::size_t> events;
  std::size_t deaths = 0;
  /// Patient-days carrying an event, over measured patient-days.
  double positive_day_rate = 0.0;
  /// Missing readings over all reading slots of the measured days.
  double missing_rate = 0.0;
};

CohortSummary summarize_cohort(const Cohort& cohort, int horizon_days = 0);

}  // namespace hfrisk
