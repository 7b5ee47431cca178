#pragma once

#include "mvgrl/trainer.hpp"

#include <filesystem>

namespace mvgrl {

/// Parses a TrainConfig from a JSON document or a flat key=value text file;
/// the key names are identical in both. Unknown keys are rejected.
TrainConfig parse_train_config(const std::filesystem::path& file);
TrainConfig train_config_from_json_text(const std::string& text);

/// Serializes the full config (every key) as JSON.
std::string train_config_to_json(const TrainConfig& cfg);

}  // namespace mvgrl
