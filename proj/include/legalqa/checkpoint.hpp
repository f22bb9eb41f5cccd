#pragma once

#include <filesystem>

#include "legalqa/predictor.hpp"

namespace legalqa {

inline constexpr int kCheckpointVersion = 1;

/// {"format": "legalqa-predictor", "version": 1, "config", "encoder",
///  "policy", "value"}. Doubles round-trip exactly.
json to_json(const PredictorModel& model);
PredictorModel predictor_model_from_json(const json& j);

void save_checkpoint(const PredictorModel& model, const std::filesystem::path& path);
/// Missing file → io_error; wrong format, version or shapes → config_error.
PredictorModel load_checkpoint(const std::filesystem::path& path);

}  // namespace legalqa
