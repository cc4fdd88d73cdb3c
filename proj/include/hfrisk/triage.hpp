#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hfrisk/date.hpp"

namespace hfrisk {

struct ReviewRecord {
  Date enrollment_date;
  std::optional<Date> last_review_date;

  friend bool operator==(const ReviewRecord&, const ReviewRecord&) = default;
};

/// Review bookkeeping per patient, keyed by patient_id.
struct ReviewState {
  std::map<std::string, ReviewRecord> patients;

  /// Adds a patient enrolled on `enrollment`; no-op if already present.
  void enroll(const std::string& patient_id, Date enrollment);
  int days_since_review(const std::string& patient_id, Date today) const;

  friend bool operator==(const ReviewState&, const ReviewState&) = default;
};

struct WorklistEntry {
  std::string patient_id;
  double risk = 0.0;
  int days_since_review = 0;
  /// days_since_review >= D.
  bool overdue = false;
  /// Placed ahead of the risk ordering to keep every patient within D days.
  bool coverage = false;
};

struct Worklist {
  Date date;
  std::vector<WorklistEntry> entries;
  std::size_t capacity_used = 0;
  std::size_t coverage_slots_used = 0;
};

/// Number of coverage slots needed today so that every patient can still be
/// reviewed within `coverage_days`: the largest excess of patients due by
/// day t+j over the capacity of the days t+1..t+j, capped at `capacity`.
std::size_t coverage_slots_needed(const ReviewState& state, const std::vector<std::string>& patients,
                                  Date today, std::size_t capacity, int coverage_days);

/// Today's review queue.
///
/// Coverage slots go to patients in order of longest time since review
/// (ties: higher risk, then patient_id). Whenever patients are overdue this
/// is exactly "overdue first, most overdue first". Remaining capacity is
/// filled by risk, descending, ties by patient_id. Every scored patient must
/// be present in `state`.
Worklist build_worklist(const std::map<std::string, double>& scores, const ReviewState& state,
                        Date today, std::size_t capacity, int coverage_days);

/// Marks one patient reviewed. Throws NotFoundError for unknown patients and
/// ValidationError when `date` precedes the last review or enrollment.
ReviewState record_review(const ReviewState& state, const std::string& patient_id, Date date);

struct TriagePatient {
  std::string patient_id;
  Date enrollment_date;
  /// Last monitored day (death or end of follow-up), inclusive.
  Date exit_date;
};

/// Risk of a patient on a day; nullopt is treated as risk 0.
using RiskFn = std::function<std::optional<double>(const std::string& patient_id, Date day)>;

struct PatientCoverage {
  std::string patient_id;
  int max_gap_days = 0;
  int reviews = 0;
  double mean_risk_at_review = 0.0;
};

struct CoverageReport {
  std::vector<PatientCoverage> patients;
  int horizon_days = 0;
  std::size_t capacity = 0;
  int coverage_days = 0;
  /// Largest number of simultaneously active patients.
  std::size_t max_active = 0;
  /// False when capacity < ceil(max_active / D).
  bool guarantee_feasible = true;
  std::string precondition_violation;
  /// Share of used review slots that were coverage promotions.
  double coverage_capacity_fraction = 0.0;
  double mean_risk_reviewed = 0.0;
  double mean_risk_unreviewed = 0.0;
  int max_gap_days = 0;
};

/// Replays `horizon_days` days from `start`: score active patients, build
/// the worklist, and treat every listed patient as reviewed that day.
/// `max_gap_days` is the largest days_since_review seen on any active day.
CoverageReport simulate_triage(const std::vector<TriagePatient>& roster, const RiskFn& risk,
                               Date start, int horizon_days, std::size_t capacity,
                               int coverage_days);

/// Per-patient CSV plus a trailing summary line.
void write_coverage_csv(std::ostream& out, const CoverageReport& report);

}  // namespace hfrisk
