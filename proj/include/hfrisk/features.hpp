#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace hfrisk {

/// Model input columns, in the order every FeatureVector uses.
enum class Feature : std::size_t {
  age,
  gender,
  diabetes,
  nyha,
  lvef_pct,
  av_block,
  lbbb,
  lives_alone,
  anxiety,
  weight_kg,
  sys_bp_mmhg,
  dia_bp_mmhg,
  spo2_pct,
  hr_bpm,
  sinus_rhythm,
  ventricular_tachycardia,
  atrial_fibrillation,
  wellbeing,
  complaints,
  weight_diff_1d,
  weight_diff_3d,
  weight_diff_8d,
};

inline constexpr std::size_t kFeatureCount = 22;
inline constexpr std::string_view kFeatureSchemaVersion = "hf22.v1";

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "age",         "gender",       "diabetes",     "nyha",
    "lvef_pct",    "av_block",     "lbbb",         "lives_alone",
    "anxiety",     "weight_kg",    "sys_bp_mmhg",  "dia_bp_mmhg",
    "spo2_pct",    "hr_bpm",       "sinus_rhythm", "ventricular_tachycardia",
    "atrial_fibrillation",         "wellbeing",    "complaints",
    "weight_diff_1d",              "weight_diff_3d",
    "weight_diff_8d"};

constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

constexpr std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return std::nullopt;
}

using FeatureVector = std::vector<double>;

}  // namespace hfrisk
