#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfrisk/pipeline.hpp"
#include "hfrisk/triage.hpp"

namespace hfrisk {

/// A log line that fails its checksum or does not parse. Startup refuses
/// such a store; the offset is the byte position of the line.
class CorruptStoreError : public std::runtime_error {
 public:
  CorruptStoreError(std::filesystem::path file, std::uint64_t offset, const std::string& what)
      : std::runtime_error(file.string() + ": corrupt record at byte offset " +
                           std::to_string(offset) + ": " + what),
        file_(std::move(file)),
        offset_(offset) {}

  const std::filesystem::path& file() const { return file_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::filesystem::path file_;
  std::uint64_t offset_;
};

/// Same key, different content.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WriteOutcome { accepted, duplicate };

std::string_view to_string(WriteOutcome outcome);

/// Append-only record log under `dir/records.log`, one record per line:
///
///     <crc32 as 8 hex digits> <compact json>\n
///
/// Every accepted write reaches the disk (fdatasync) before the call returns.
/// Opening replays the log; a final line without its newline is an
/// interrupted write and is cut off, any other bad line is fatal.
///
/// Not thread-safe; callers serialize writes.
class Store {
 public:
  static Store open(const std::filesystem::path& dir);

  Store(Store&&) noexcept;
  Store& operator=(Store&&) noexcept;
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;
  ~Store();

  // Each mutator validates, appends and applies; identical re-submissions
  // return `duplicate` and write nothing. ConflictError for a different
  // record under an existing key, ValidationError / NotFoundError otherwise.
  WriteOutcome add_profile(const PatientProfile& profile, Date enrollment_date);
  WriteOutcome add_measurement(const DailyMeasurement& m);
  WriteOutcome add_event(const ClinicalEvent& e);
  WriteOutcome add_review(const std::string& patient_id, Date date);
  void set_active_model(const std::string& model_id);
  void set_clock(Date today);

  const std::map<std::string, PatientProfile>& profiles() const { return profiles_; }
  const std::map<std::string, std::map<Date, DailyMeasurement>>& measurements() const {
    return measurements_;
  }
  const std::map<std::string, std::vector<ClinicalEvent>>& events() const { return events_; }
  const ReviewState& reviews() const { return reviews_; }
  const std::optional<std::string>& active_model() const { return active_model_; }
  const std::optional<Date>& clock() const { return clock_; }

  std::optional<Date> death_date(const std::string& patient_id) const;
  std::size_t record_count() const { return records_; }
  const std::filesystem::path& log_path() const { return path_; }
  /// Bytes dropped from a torn final line at open; 0 if none.
  std::uint64_t truncated_bytes() const { return truncated_; }

  /// Whole store as a cohort, profiles and rows in id/date order.
  Cohort cohort() const;
  /// Only data dated on or before `day`.
  Cohort cohort_until(Date day) const;

 private:
  Store() = default;
  WriteOutcome apply(const nlohmann::json& record);
  void append(const nlohmann::json& record);
  Cohort collect(std::optional<Date> until) const;

  std::filesystem::path path_;
  int fd_ = -1;
  std::size_t records_ = 0;
  std::uint64_t truncated_ = 0;

  std::map<std::string, PatientProfile> profiles_;
  std::map<std::string, std::map<Date, DailyMeasurement>> measurements_;
  std::map<std::string, std::vector<ClinicalEvent>> events_;
  ReviewState reviews_;
  std::optional<std::string> active_model_;
  std::optional<Date> clock_;
};

/// Checksum used for log lines.
std::uint32_t record_crc(std::string_view payload);

}  // namespace hfrisk
