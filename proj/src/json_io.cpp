#include "hfrisk/json_io.hpp"

#include "hfrisk/error.hpp"

namespace hfrisk {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) throw ValidationError(std::string("missing field '") + name + "'");
  return *it;
}

std::string str(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

double num(const json& v, const char* name) {
  if (!v.is_number()) throw ValidationError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

bool flag(const json& v, const char* name) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
  throw ValidationError(std::string("field '") + name + "' must be a boolean");
}

Date date_of(const json& j, const char* name) {
  try {
    return Date::parse(str(j, name));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("field '") + name + "': " + e.what());
  }
}

template <typename T, typename Fn>
std::optional<T> optional_field(const json& j, std::initializer_list<const char*> names, Fn fn) {
  for (const char* n : names) {
    auto it = j.find(n);
    if (it != j.end() && !it->is_null()) return fn(*it, n);
  }
  return std::nullopt;
}

}  // namespace

json to_json(const PatientProfile& p) {
  return {{"patient_id", p.patient_id},
          {"age", p.age},
          {"gender", p.gender == Gender::male ? "M" : "F"},
          {"nyha", p.nyha == NyhaClass::III ? "III" : "II"},
          {"lvef_pct", p.lvef_pct},
          {"diabetes", p.diabetes},
          {"av_block", p.av_block},
          {"lbbb", p.lbbb},
          {"lives_alone", p.lives_alone},
          {"anxiety", p.anxiety}};
}

PatientProfile profile_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("patient must be a JSON object");
  PatientProfile p;
  p.patient_id = str(j, "patient_id");
  const auto& age = field(j, "age");
  if (!age.is_number_integer()) throw ValidationError("field 'age' must be an integer");
  p.age = age.get<int>();
  const auto gender = str(j, "gender");
  if (gender == "F") p.gender = Gender::female;
  else if (gender == "M") p.gender = Gender::male;
  else throw ValidationError("field 'gender' must be F or M");
  const auto nyha = str(j, "nyha");
  if (nyha == "II") p.nyha = NyhaClass::II;
  else if (nyha == "III") p.nyha = NyhaClass::III;
  else throw ValidationError("field 'nyha' must be II or III");
  p.lvef_pct = num(field(j, "lvef_pct"), "lvef_pct");
  p.diabetes = flag(field(j, "diabetes"), "diabetes");
  p.av_block = flag(field(j, "av_block"), "av_block");
  p.lbbb = flag(field(j, "lbbb"), "lbbb");
  p.lives_alone = flag(field(j, "lives_alone"), "lives_alone");
  p.anxiety = flag(field(j, "anxiety"), "anxiety");
  validate(p);
  return p;
}

json to_json(const DailyMeasurement& m) {
  json j{{"patient_id", m.patient_id}, {"date", m.date.iso()}};
  if (m.weight_kg) j["weight_kg"] = *m.weight_kg;
  if (m.sys_bp_mmhg) j["sys_bp_mmhg"] = *m.sys_bp_mmhg;
  if (m.dia_bp_mmhg) j["dia_bp_mmhg"] = *m.dia_bp_mmhg;
  if (m.spo2_pct) j["spo2_pct"] = *m.spo2_pct;
  if (m.hr_bpm) j["hr_bpm"] = *m.hr_bpm;
  if (m.sinus_rhythm) j["sinus_rhythm"] = *m.sinus_rhythm;
  if (m.ventricular_tachycardia) j["ventricular_tachycardia"] = *m.ventricular_tachycardia;
  if (m.atrial_fibrillation) j["atrial_fibrillation"] = *m.atrial_fibrillation;
  if (m.wellbeing) j["wellbeing"] = *m.wellbeing;
  if (m.complaints) j["complaints"] = *m.complaints;
  return j;
}

DailyMeasurement measurement_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("measurement must be a JSON object");
  DailyMeasurement m;
  m.patient_id = str(j, "patient_id");
  m.date = date_of(j, "date");
  m.weight_kg = optional_field<double>(j, {"weight_kg"}, num);
  m.sys_bp_mmhg = optional_field<double>(j, {"sys_bp_mmhg"}, num);
  m.dia_bp_mmhg = optional_field<double>(j, {"dia_bp_mmhg"}, num);
  m.spo2_pct = optional_field<double>(j, {"spo2_pct"}, num);
  m.hr_bpm = optional_field<double>(j, {"hr_bpm"}, num);
  m.sinus_rhythm = optional_field<bool>(j, {"sinus_rhythm"}, flag);
  m.ventricular_tachycardia = optional_field<bool>(j, {"ventricular_tachycardia", "vt"}, flag);
  m.atrial_fibrillation = optional_field<bool>(j, {"atrial_fibrillation", "af"}, flag);
  m.wellbeing = optional_field<int>(j, {"wellbeing"}, [](const json& v, const char* n) {
    if (!v.is_number_integer()) throw ValidationError(std::string("field '") + n + "' must be an integer");
    return v.get<int>();
  });
  m.complaints = optional_field<bool>(j, {"complaints"}, flag);
  validate(m);
  return m;
}

json to_json(const ClinicalEvent& e) {
  return {{"patient_id", e.patient_id}, {"date", e.date.iso()}, {"kind", std::string(to_string(e.kind))}};
}

ClinicalEvent event_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("event must be a JSON object");
  ClinicalEvent e;
  e.patient_id = str(j, "patient_id");
  e.date = date_of(j, "date");
  auto kind = parse_event_kind(str(j, "kind"));
  if (!kind) throw ValidationError("field 'kind' must be intervention, hospitalization or death");
  e.kind = *kind;
  return e;
}

json to_json(const Worklist& w) {
  json entries = json::array();
  for (const auto& e : w.entries) {
    entries.push_back({{"patient_id", e.patient_id},
                       {"risk", e.risk},
                       {"days_since_review", e.days_since_review},
                       {"overdue", e.overdue},
                       {"coverage", e.coverage}});
  }
  return {{"date", w.date.iso()},
          {"entries", entries},
          {"capacity_used", w.capacity_used},
          {"coverage_slots_used", w.coverage_slots_used}};
}

json to_json(const TrainConfig& c) {
  json j{{"learning_rate", c.learning_rate},
         {"batch_size", c.batch_size},
         {"max_epochs", c.max_epochs},
         {"adam_beta1", c.adam.beta1},
         {"adam_beta2", c.adam.beta2},
         {"adam_epsilon", c.adam.epsilon},
         {"seed", c.seed}};
  j["patience"] = c.patience ? json(*c.patience) : json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& defaults) {
  if (!j.is_object()) throw ValidationError("train config must be a JSON object");
  TrainConfig c = defaults;
  auto number = [&](const char* name, double& out) {
    if (auto it = j.find(name); it != j.end()) out = num(*it, name);
  };
  auto integer = [&](const char* name, auto& out) {
    if (auto it = j.find(name); it != j.end()) {
      if (!it->is_number_integer() || it->get<long long>() < 0) {
        throw ValidationError(std::string("field '") + name + "' must be a non-negative integer");
      }
      out = it->get<std::remove_reference_t<decltype(out)>>();
    }
  };
  number("learning_rate", c.learning_rate);
  integer("batch_size", c.batch_size);
  integer("max_epochs", c.max_epochs);
  number("adam_beta1", c.adam.beta1);
  number("adam_beta2", c.adam.beta2);
  number("adam_epsilon", c.adam.epsilon);
  integer("seed", c.seed);
  if (auto it = j.find("patience"); it != j.end()) {
    if (it->is_null()) {
      c.patience.reset();
    } else {
      int p = 0;
      integer("patience", p);
      c.patience = p;
    }
  }
  c.validate();
  return c;
}

}  // namespace hfrisk
