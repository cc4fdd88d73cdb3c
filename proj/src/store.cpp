#include "hfrisk/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "hfrisk/error.hpp"
#include "hfrisk/json_io.hpp"

namespace hfrisk {

using nlohmann::json;

namespace {

constexpr const char* kLogName = "records.log";

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

void write_all(int fd, std::string_view data, const std::string& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write " + path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string crc_hex(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

Date date_field(const json& j, const char* name) {
  return Date::parse(j.at(name).get<std::string>());
}

}  // namespace

std::string_view to_string(WriteOutcome outcome) {
  return outcome == WriteOutcome::accepted ? "accepted" : "duplicate";
}

std::uint32_t record_crc(std::string_view payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size()));
  return static_cast<std::uint32_t>(crc);
}

Store::Store(Store&& other) noexcept { *this = std::move(other); }

Store& Store::operator=(Store&& other) noexcept {
  if (this == &other) return *this;
  if (fd_ >= 0) ::close(fd_);
  path_ = std::move(other.path_);
  fd_ = std::exchange(other.fd_, -1);
  records_ = other.records_;
  truncated_ = other.truncated_;
  profiles_ = std::move(other.profiles_);
  measurements_ = std::move(other.measurements_);
  events_ = std::move(other.events_);
  reviews_ = std::move(other.reviews_);
  active_model_ = std::move(other.active_model_);
  clock_ = other.clock_;
  return *this;
}

Store::~Store() {
  if (fd_ >= 0) ::close(fd_);
}

Store Store::open(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Store store;
  store.path_ = dir / kLogName;

  std::string content;
  {
    std::ifstream in(store.path_, std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      content = buf.str();
    }
  }

  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) {
      // Interrupted final append: never acknowledged, so drop it.
      store.truncated_ = content.size() - pos;
      break;
    }
    const std::string_view line(content.data() + pos, nl - pos);
    auto corrupt = [&](const std::string& what) -> CorruptStoreError {
      return CorruptStoreError(store.path_, pos, what);
    };
    if (line.size() < 10 || line[8] != ' ') throw corrupt("malformed line");
    std::uint32_t crc = 0;
    try {
      std::size_t used = 0;
      crc = static_cast<std::uint32_t>(std::stoul(std::string(line.substr(0, 8)), &used, 16));
      if (used != 8) throw std::invalid_argument("crc");
    } catch (const std::exception&) {
      throw corrupt("malformed checksum");
    }
    const std::string_view payload = line.substr(9);
    if (record_crc(payload) != crc) throw corrupt("checksum mismatch");
    try {
      store.apply(json::parse(payload));
    } catch (const std::exception& e) {
      throw corrupt(e.what());
    }
    ++store.records_;
    pos = nl + 1;
  }

  store.fd_ = ::open(store.path_.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (store.fd_ < 0) throw_errno("open " + store.path_.string());
  if (store.truncated_ > 0) {
    if (::ftruncate(store.fd_, static_cast<off_t>(pos)) != 0) throw_errno("truncate " + store.path_.string());
    if (::fdatasync(store.fd_) != 0) throw_errno("fdatasync " + store.path_.string());
  }
  if (::lseek(store.fd_, 0, SEEK_END) < 0) throw_errno("seek " + store.path_.string());
  return store;
}

void Store::append(const json& record) {
  const std::string payload = record.dump();
  const std::string line = crc_hex(record_crc(payload)) + " " + payload + "\n";
  write_all(fd_, line, path_.string());
  if (::fdatasync(fd_) != 0) throw_errno("fdatasync " + path_.string());
  ++records_;
}

// Validates a record against the current state. With the state already
// holding the same record the result is `duplicate` and nothing changes.
WriteOutcome Store::apply(const json& r) {
  const std::string type = r.at("type").get<std::string>();

  if (type == "patient") {
    const auto p = profile_from_json(r.at("patient"));
    const Date enrolled = date_field(r, "enrollment_date");
    if (auto it = profiles_.find(p.patient_id); it != profiles_.end()) {
      if (it->second == p && reviews_.patients.at(p.patient_id).enrollment_date == enrolled) {
        return WriteOutcome::duplicate;
      }
      throw ConflictError("patient " + p.patient_id + " already exists with different data");
    }
    profiles_.emplace(p.patient_id, p);
    reviews_.enroll(p.patient_id, enrolled);
    return WriteOutcome::accepted;
  }

  if (type == "measurement") {
    const auto m = measurement_from_json(r.at("measurement"));
    if (!profiles_.contains(m.patient_id)) throw NotFoundError("unknown patient_id " + m.patient_id);
    auto& rows = measurements_[m.patient_id];
    if (auto it = rows.find(m.date); it != rows.end()) {
      if (it->second == m) return WriteOutcome::duplicate;
      throw ConflictError("measurement for " + m.patient_id + " on " + m.date.iso() +
                          " already exists with different values");
    }
    rows.emplace(m.date, m);
    return WriteOutcome::accepted;
  }

  if (type == "event") {
    const auto e = event_from_json(r.at("event"));
    if (!profiles_.contains(e.patient_id)) throw NotFoundError("unknown patient_id " + e.patient_id);
    auto& list = events_[e.patient_id];
    if (std::find(list.begin(), list.end(), e) != list.end()) return WriteOutcome::duplicate;
    if (auto death = death_date(e.patient_id)) {
      if (e.kind == EventKind::death) throw ConflictError("patient " + e.patient_id + " already has a death event");
      if (e.date > *death) throw ValidationError("event after death for " + e.patient_id + " on " + e.date.iso());
    }
    if (e.kind == EventKind::death) {
      for (const auto& other : list) {
        if (other.date > e.date) {
          throw ValidationError("death on " + e.date.iso() + " precedes an existing event for " + e.patient_id);
        }
      }
    }
    list.push_back(e);
    return WriteOutcome::accepted;
  }

  if (type == "review") {
    const std::string id = r.at("patient_id").get<std::string>();
    const Date date = date_field(r, "date");
    auto it = reviews_.patients.find(id);
    if (it == reviews_.patients.end()) throw NotFoundError("unknown patient_id " + id);
    if (it->second.last_review_date == date) return WriteOutcome::duplicate;
    reviews_ = record_review(reviews_, id, date);
    return WriteOutcome::accepted;
  }

  if (type == "active_model") {
    active_model_ = r.at("model_id").get<std::string>();
    return WriteOutcome::accepted;
  }

  if (type == "clock") {
    clock_ = date_field(r, "date");
    return WriteOutcome::accepted;
  }

  throw ValidationError("unknown record type '" + type + "'");
}

WriteOutcome Store::add_profile(const PatientProfile& profile, Date enrollment_date) {
  validate(profile);
  const json record{{"type", "patient"}, {"patient", to_json(profile)}, {"enrollment_date", enrollment_date.iso()}};
  if (profiles_.contains(profile.patient_id)) return apply(record);
  append(record);
  return apply(record);
}

WriteOutcome Store::add_measurement(const DailyMeasurement& m) {
  validate(m);
  if (!profiles_.contains(m.patient_id)) throw NotFoundError("unknown patient_id " + m.patient_id);
  const json record{{"type", "measurement"}, {"measurement", to_json(m)}};
  if (auto pit = measurements_.find(m.patient_id); pit != measurements_.end() && pit->second.contains(m.date)) {
    return apply(record);
  }
  append(record);
  return apply(record);
}

WriteOutcome Store::add_event(const ClinicalEvent& e) {
  if (!profiles_.contains(e.patient_id)) throw NotFoundError("unknown patient_id " + e.patient_id);
  const json record{{"type", "event"}, {"event", to_json(e)}};
  // Dry run against a copy of this patient's events.
  auto saved = events_[e.patient_id];
  const auto outcome = apply(record);
  if (outcome == WriteOutcome::duplicate) return outcome;
  try {
    append(record);
  } catch (...) {
    events_[e.patient_id] = std::move(saved);
    throw;
  }
  return outcome;
}

WriteOutcome Store::add_review(const std::string& patient_id, Date date) {
  const json record{{"type", "review"}, {"patient_id", patient_id}, {"date", date.iso()}};
  const ReviewState saved = reviews_;
  const auto outcome = apply(record);
  if (outcome == WriteOutcome::duplicate) return outcome;
  try {
    append(record);
  } catch (...) {
    reviews_ = saved;
    throw;
  }
  return outcome;
}

void Store::set_active_model(const std::string& model_id) {
  if (model_id.empty()) throw ValidationError("model id must not be empty");
  const json record{{"type", "active_model"}, {"model_id", model_id}};
  append(record);
  apply(record);
}

void Store::set_clock(Date today) {
  const json record{{"type", "clock"}, {"date", today.iso()}};
  append(record);
  apply(record);
}

std::optional<Date> Store::death_date(const std::string& patient_id) const {
  auto it = events_.find(patient_id);
  if (it == events_.end()) return std::nullopt;
  for (const auto& e : it->second) {
    if (e.kind == EventKind::death) return e.date;
  }
  return std::nullopt;
}

Cohort Store::cohort() const { return collect(std::nullopt); }

Cohort Store::cohort_until(Date day) const { return collect(day); }

Cohort Store::collect(std::optional<Date> until) const {
  Cohort c;
  for (const auto& [id, p] : profiles_) c.profiles.push_back(p);
  for (const auto& [id, rows] : measurements_) {
    for (const auto& [date, m] : rows) {
      if (!until || date <= *until) c.measurements.push_back(m);
    }
  }
  for (const auto& [id, list] : events_) {
    auto sorted = list;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    for (const auto& e : sorted) {
      if (!until || e.date <= *until) c.events.push_back(e);
    }
  }
  return c;
}

}  // namespace hfrisk
