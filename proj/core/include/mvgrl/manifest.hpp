#pragma once

#include "mvgrl/config.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace mvgrl {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything needed to replay one training run bit-exactly in strict mode:
/// the config snapshot, the dataset path and content fingerprint, and where
/// the artifacts were written.
struct RunManifest {
  TrainConfig config;
  std::string dataset_path;
  std::string dataset_format;  // "tu" | "bundle"
  uint64_t dataset_fingerprint = 0;
  std::map<std::string, std::string> artifacts;
  std::string tool_version = kToolVersion;

  std::string to_json() const;
  static RunManifest from_json_file(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;
};

}  // namespace mvgrl
