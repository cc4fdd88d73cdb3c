#pragma once

#include <nlohmann/json.hpp>

#include "hfrisk/mlp.hpp"
#include "hfrisk/pipeline.hpp"
#include "hfrisk/triage.hpp"

namespace hfrisk {

// Wire format shared by the HTTP API and the store log. Parsing throws
// ValidationError with the offending field name.

nlohmann::json to_json(const PatientProfile& p);
PatientProfile profile_from_json(const nlohmann::json& j);

/// Absent readings are omitted. `vt`/`af` are accepted as aliases on input.
nlohmann::json to_json(const DailyMeasurement& m);
DailyMeasurement measurement_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ClinicalEvent& e);
ClinicalEvent event_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Worklist& w);
nlohmann::json to_json(const TrainConfig& c);
/// Missing fields keep the values in `defaults`.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& defaults = {});

}  // namespace hfrisk
