#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hfrisk/date.hpp"
#include "hfrisk/features.hpp"

namespace hfrisk {

enum class Gender { female, male };
enum class NyhaClass { II, III };
enum class EventKind { intervention, hospitalization, death };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct PatientProfile {
  std::string patient_id;
  int age = 0;
  Gender gender = Gender::female;
  NyhaClass nyha = NyhaClass::II;
  double lvef_pct = 0.0;
  bool diabetes = false;
  bool av_block = false;
  bool lbbb = false;
  bool lives_alone = false;
  bool anxiety = false;

  friend bool operator==(const PatientProfile&, const PatientProfile&) = default;
};

/// One calendar day of self-measured vitals. Every reading is optional.
struct DailyMeasurement {
  std::string patient_id;
  Date date;
  std::optional<double> weight_kg;
  std::optional<double> sys_bp_mmhg;
  std::optional<double> dia_bp_mmhg;
  std::optional<double> spo2_pct;
  std::optional<double> hr_bpm;
  std::optional<bool> sinus_rhythm;
  std::optional<bool> ventricular_tachycardia;
  std::optional<bool> atrial_fibrillation;
  std::optional<int> wellbeing;
  std::optional<bool> complaints;

  friend bool operator==(const DailyMeasurement&, const DailyMeasurement&) = default;
};

struct ClinicalEvent {
  std::string patient_id;
  Date date;
  EventKind kind = EventKind::intervention;

  friend bool operator==(const ClinicalEvent&, const ClinicalEvent&) = default;
};

struct Cohort {
  std::vector<PatientProfile> profiles;
  std::vector<DailyMeasurement> measurements;
  std::vector<ClinicalEvent> events;
};

// Contract checks; each throws ValidationError naming the offending field.
void validate(const PatientProfile& profile);
void validate(const DailyMeasurement& m);
/// Referential integrity, measurement uniqueness and the death invariants.
void validate(const Cohort& cohort);

// ---- CSV formats -----------------------------------------------------------

inline constexpr std::string_view kProfilesHeader =
    "patient_id,age,gender,nyha,lvef_pct,diabetes,av_block,lbbb,lives_alone,anxiety";
inline constexpr std::string_view kMeasurementsHeader =
    "patient_id,date,weight_kg,sys_bp_mmhg,dia_bp_mmhg,spo2_pct,hr_bpm,sinus_rhythm,vt,af,"
    "wellbeing,complaints";
inline constexpr std::string_view kEventsHeader = "patient_id,date,kind";

/// Reads the three cohort CSVs. Errors carry file, line and column.
Cohort parse_cohort(const std::filesystem::path& profiles_file,
                    const std::filesystem::path& measurements_file,
                    const std::filesystem::path& events_file);
/// Stream variant; `names` label the sources in error messages.
Cohort parse_cohort(std::istream& profiles, std::istream& measurements, std::istream& events,
                    const std::array<std::string, 3>& names = {"profiles.csv", "measurements.csv",
                                                               "events.csv"});
Cohort load_cohort_dir(const std::filesystem::path& dir);

void write_profiles(std::ostream& out, const std::vector<PatientProfile>& profiles);
void write_measurements(std::ostream& out, const std::vector<DailyMeasurement>& measurements);
void write_events(std::ostream& out, const std::vector<ClinicalEvent>& events);
void write_cohort_dir(const std::filesystem::path& dir, const Cohort& cohort);

// ---- Imputation and sample assembly ---------------------------------------

using Series = std::vector<std::optional<double>>;

inline constexpr int kMaxImputedGap = 2;

/// Fills interior gaps of at most two consecutive days by linear
/// interpolation. Longer gaps and leading/trailing gaps stay absent.
Series impute_series(const Series& values);

/// Day-level readings in schema order (weight .. complaints).
inline constexpr std::size_t kDailyFieldCount = 10;

/// One patient's measurements on a dense calendar, imputed per field.
struct PatientTimeline {
  std::string patient_id;
  Date first_day;
  std::array<Series, kDailyFieldCount> fields;

  std::size_t days() const { return fields[0].size(); }
  Date last_day() const { return first_day + static_cast<int>(days()) - 1; }
  std::optional<double> at(std::size_t field, Date day) const;
};

/// Builds the dense, imputed timeline. Measurements must all belong to one
/// patient; order does not matter. Returns an empty timeline for no rows.
PatientTimeline build_timeline(std::string patient_id,
                               const std::vector<DailyMeasurement>& measurements);

struct LabeledSample {
  std::string patient_id;
  Date date;
  FeatureVector features;
  bool label = false;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// Static (profile) part of the feature vector.
void encode_profile(const PatientProfile& profile, FeatureVector& out);

/// Feature vector at day t, or nullopt when any input (including the weights
/// at t-1, t-3, t-8) is unavailable after imputation.
std::optional<FeatureVector> build_features(const PatientProfile& profile,
                                            const PatientTimeline& timeline, Date t);

/// Days before t that can influence the features at t: the 8-day weight
/// difference plus the widest imputable gap.
inline constexpr int kFeatureLookbackDays = 8 + kMaxImputedGap + 1;

/// Features at day t from the rows dated on or before t only, as a live
/// scorer sees them. Rows must belong to one patient, in any order.
std::optional<FeatureVector> features_as_of(const PatientProfile& profile,
                                            const std::vector<DailyMeasurement>& rows, Date t);

/// True iff an event of any kind for the patient falls in [t, t + horizon].
bool label_for(const std::vector<ClinicalEvent>& patient_events, Date t, int horizon_days);

std::optional<LabeledSample> build_sample(const PatientProfile& profile,
                                          const PatientTimeline& timeline,
                                          const std::vector<ClinicalEvent>& patient_events,
                                          Date t, int horizon_days = 0);

/// Every sample the cohort yields, grouped by patient in profile order and
/// ordered by date within a patient.
std::vector<LabeledSample> assemble_samples(const Cohort& cohort, int horizon_days = 0);

// ---- Split, balance, scale -------------------------------------------------

struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return mean.empty(); }
  void apply(FeatureVector& x) const;
  FeatureVector transform(const FeatureVector& x) const;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

/// Per-feature mean and population standard deviation.
Scaler fit_scaler(const std::vector<LabeledSample>& samples);

struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> validation;
  std::vector<LabeledSample> test;
  Scaler scaler;
};

inline constexpr std::size_t kMinSplitPatients = 6;

/// Patient-level 4:1:1 assignment, stratified on event and sample counts.
/// The scaler is fitted on the resulting train set.
DatasetSplit split_by_patient(const std::vector<LabeledSample>& samples, std::uint64_t seed);

/// Duplicates minority samples (with replacement) until the classes balance.
/// Originals keep their order; duplicates are appended.
std::vector<LabeledSample> oversample_minority(const std::vector<LabeledSample>& train,
                                               std::uint64_t seed);

/// Applies the split's scaler to all three sets.
DatasetSplit standardize(const DatasetSplit& split);

// ---- Split serialization ---------------------------------------------------

void write_samples(std::ostream& out, const std::vector<LabeledSample>& samples);
std::vector<LabeledSample> read_samples(std::istream& in, const std::string& name = "samples");
void write_scaler(std::ostream& out, const Scaler& scaler);
Scaler read_scaler(std::istream& in, const std::string& name = "scaler.csv");

/// train.csv, validation.csv, test.csv and scaler.csv.
void write_split_dir(const std::filesystem::path& dir, const DatasetSplit& split);
DatasetSplit read_split_dir(const std::filesystem::path& dir);

}  // namespace hfrisk
