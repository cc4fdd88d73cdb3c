#include "hfrisk/triage.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hfrisk/error.hpp"
#include "hfrisk/text.hpp"

namespace hfrisk {

void ReviewState::enroll(const std::string& patient_id, Date enrollment) {
  patients.try_emplace(patient_id, ReviewRecord{enrollment, std::nullopt});
}

int ReviewState::days_since_review(const std::string& patient_id, Date today) const {
  auto it = patients.find(patient_id);
  if (it == patients.end()) throw NotFoundError("no review state for patient " + patient_id);
  const auto& r = it->second;
  return today - r.last_review_date.value_or(r.enrollment_date);
}

std::size_t coverage_slots_needed(const ReviewState& state, const std::vector<std::string>& patients,
                                  Date today, std::size_t capacity, int coverage_days) {
  std::vector<int> slack;
  slack.reserve(patients.size());
  for (const auto& id : patients) {
    slack.push_back(coverage_days - state.days_since_review(id, today));
  }
  std::sort(slack.begin(), slack.end());
  // Patients due by day t+j must fit in today's slots plus K per later day.
  long long needed = 0;
  for (std::size_t k = 0; k < slack.size(); ++k) {
    const long long due = static_cast<long long>(k) + 1;
    const long long later = static_cast<long long>(capacity) * std::max(slack[k], 0);
    needed = std::max(needed, due - later);
  }
  return std::min<std::size_t>(static_cast<std::size_t>(needed), capacity);
}

Worklist build_worklist(const std::map<std::string, double>& scores, const ReviewState& state,
                        Date today, std::size_t capacity, int coverage_days) {
  if (capacity < 1) throw ValidationError("worklist: capacity must be >= 1");
  if (coverage_days < 1) throw ValidationError("worklist: coverage days must be >= 1");

  std::vector<WorklistEntry> all;
  std::vector<std::string> ids;
  all.reserve(scores.size());
  for (const auto& [id, risk] : scores) {
    if (std::isnan(risk)) throw ValidationError("worklist: NaN risk for " + id);
    const int days = state.days_since_review(id, today);
    all.push_back({id, risk, days, days >= coverage_days, false});
    ids.push_back(id);
  }
  const std::size_t slots = coverage_slots_needed(state, ids, today, capacity, coverage_days);

  auto by_urgency = [](const WorklistEntry& a, const WorklistEntry& b) {
    if (a.days_since_review != b.days_since_review) return a.days_since_review > b.days_since_review;
    if (a.risk != b.risk) return a.risk > b.risk;
    return a.patient_id < b.patient_id;
  };
  auto by_risk = [](const WorklistEntry& a, const WorklistEntry& b) {
    if (a.risk != b.risk) return a.risk > b.risk;
    return a.patient_id < b.patient_id;
  };
  std::sort(all.begin(), all.end(), by_urgency);
  const auto split = all.begin() + static_cast<std::ptrdiff_t>(std::min(slots, all.size()));
  for (auto it = all.begin(); it != split; ++it) it->coverage = true;
  std::sort(split, all.end(), by_risk);

  Worklist w;
  w.date = today;
  const std::size_t n = std::min(capacity, all.size());
  w.entries.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  w.capacity_used = n;
  w.coverage_slots_used = static_cast<std::size_t>(
      std::count_if(w.entries.begin(), w.entries.end(), [](const auto& e) { return e.coverage; }));
  return w;
}

ReviewState record_review(const ReviewState& state, const std::string& patient_id, Date date) {
  auto it = state.patients.find(patient_id);
  if (it == state.patients.end()) throw NotFoundError("unknown patient " + patient_id);
  const auto& r = it->second;
  if (r.last_review_date && date < *r.last_review_date) {
    throw ValidationError("review date " + date.iso() + " precedes last review " +
                          r.last_review_date->iso() + " of " + patient_id);
  }
  if (date < r.enrollment_date) {
    throw ValidationError("review date " + date.iso() + " precedes enrollment of " + patient_id);
  }
  ReviewState out = state;
  out.patients[patient_id].last_review_date = date;
  return out;
}

CoverageReport simulate_triage(const std::vector<TriagePatient>& roster, const RiskFn& risk,
                               Date start, int horizon_days, std::size_t capacity,
                               int coverage_days) {
  if (roster.empty()) throw ValidationError("triage simulation: empty cohort");
  if (horizon_days < 1) throw ValidationError("triage simulation: horizon must be >= 1 day");
  if (capacity < 1 || coverage_days < 1) {
    throw ValidationError("triage simulation: capacity and coverage days must be >= 1");
  }

  CoverageReport report;
  report.horizon_days = horizon_days;
  report.capacity = capacity;
  report.coverage_days = coverage_days;

  ReviewState state;
  std::map<std::string, std::size_t> index;
  for (const auto& p : roster) {
    if (!index.emplace(p.patient_id, report.patients.size()).second) {
      throw ValidationError("triage simulation: duplicate patient " + p.patient_id);
    }
    state.enroll(p.patient_id, p.enrollment_date);
    report.patients.push_back({p.patient_id, 0, 0, 0.0});
  }

  double reviewed_risk = 0.0;
  double unreviewed_risk = 0.0;
  std::size_t reviewed_n = 0;
  std::size_t unreviewed_n = 0;
  std::size_t slots_used = 0;
  std::size_t coverage_used = 0;

  for (int d = 0; d < horizon_days; ++d) {
    const Date today = start + d;
    std::map<std::string, double> scores;
    for (const auto& p : roster) {
      if (p.enrollment_date > today || p.exit_date < today) continue;
      scores[p.patient_id] = risk ? risk(p.patient_id, today).value_or(0.0) : 0.0;
    }
    if (scores.empty()) continue;
    report.max_active = std::max(report.max_active, scores.size());
    for (const auto& [id, r] : scores) {
      auto& pc = report.patients[index.at(id)];
      pc.max_gap_days = std::max(pc.max_gap_days, state.days_since_review(id, today));
    }
    const Worklist w = build_worklist(scores, state, today, capacity, coverage_days);
    slots_used += w.capacity_used;
    coverage_used += w.coverage_slots_used;
    for (const auto& e : w.entries) {
      state.patients[e.patient_id].last_review_date = today;
      auto& pc = report.patients[index.at(e.patient_id)];
      ++pc.reviews;
      pc.mean_risk_at_review += e.risk;
      reviewed_risk += e.risk;
      ++reviewed_n;
      scores.erase(e.patient_id);
    }
    for (const auto& [id, r] : scores) {
      unreviewed_risk += r;
      ++unreviewed_n;
    }
  }

  for (auto& pc : report.patients) {
    if (pc.reviews > 0) pc.mean_risk_at_review /= pc.reviews;
    report.max_gap_days = std::max(report.max_gap_days, pc.max_gap_days);
  }
  const auto required = (report.max_active + static_cast<std::size_t>(coverage_days) - 1) /
                        static_cast<std::size_t>(coverage_days);
  if (capacity < required) {
    report.guarantee_feasible = false;
    report.precondition_violation = "capacity " + std::to_string(capacity) + " < ceil(" +
                                    std::to_string(report.max_active) + "/" +
                                    std::to_string(coverage_days) + ") = " +
                                    std::to_string(required) + "; coverage not guaranteed";
  }
  if (slots_used > 0) {
    report.coverage_capacity_fraction =
        static_cast<double>(coverage_used) / static_cast<double>(slots_used);
  }
  if (reviewed_n > 0) report.mean_risk_reviewed = reviewed_risk / static_cast<double>(reviewed_n);
  if (unreviewed_n > 0) {
    report.mean_risk_unreviewed = unreviewed_risk / static_cast<double>(unreviewed_n);
  }
  return report;
}

void write_coverage_csv(std::ostream& out, const CoverageReport& r) {
  using text::format_double;
  out << "patient_id,max_gap_days,reviews,mean_risk_at_review\n";
  for (const auto& p : r.patients) {
    out << p.patient_id << ',' << p.max_gap_days << ',' << p.reviews << ','
        << format_double(p.mean_risk_at_review) << '\n';
  }
  out << "# summary: horizon_days=" << r.horizon_days << " capacity=" << r.capacity
      << " coverage_days=" << r.coverage_days << " max_active=" << r.max_active
      << " max_gap_days=" << r.max_gap_days
      << " guarantee_feasible=" << (r.guarantee_feasible ? 1 : 0)
      << " coverage_capacity_fraction=" << format_double(r.coverage_capacity_fraction)
      << " mean_risk_reviewed=" << format_double(r.mean_risk_reviewed)
      << " mean_risk_unreviewed=" << format_double(r.mean_risk_unreviewed) << '\n';
}

}  // namespace hfrisk
