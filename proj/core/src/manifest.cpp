#include "mvgrl/manifest.hpp"

#include "mvgrl/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mvgrl {

using nlohmann::json;

std::string RunManifest::to_json() const {
  json j;
  j["tool_version"] = tool_version;
  j["config"] = json::parse(train_config_to_json(config));
  j["dataset"]["path"] = dataset_path;
  j["dataset"]["format"] = dataset_format;
  j["dataset"]["fingerprint"] = dataset_fingerprint;
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  check_run(static_cast<bool>(in), "cannot open manifest: " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: invalid JSON: ") + e.what());
  }
  RunManifest m;
  m.tool_version = j.value("tool_version", std::string("?"));
  m.config = train_config_from_json_text(j.at("config").dump());
  m.dataset_path = j.at("dataset").at("path").get<std::string>();
  m.dataset_format = j.at("dataset").at("format").get<std::string>();
  m.dataset_fingerprint = j.at("dataset").value("fingerprint", 0ULL);
  if (j.contains("artifacts")) {
    for (const auto& [key, value] : j.at("artifacts").items()) {
      m.artifacts[key] = value.get<std::string>();
    }
  }
  return m;
}

void RunManifest::save(const std::filesystem::path& file) const {
  write_text_file(file, to_json());
}

}  // namespace mvgrl
