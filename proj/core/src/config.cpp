#include "mvgrl/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mvgrl {

using nlohmann::json;

namespace {

ViewSpec view_from_json(const json& j) {
  ViewSpec spec;
  if (j.is_string()) {
    spec.view = view_kind_from_string(j.get<std::string>());
  } else {
    check_arg(j.is_object() && j.contains("view"), "config: each view needs a \"view\" kind");
    for (const auto& [key, value] : j.items()) {
      if (key == "view") {
        spec.view = view_kind_from_string(value.get<std::string>());
      } else if (key == "alpha") {
        spec.coefficients.alpha = value.get<Real>();
      } else if (key == "t") {
        spec.coefficients.t = value.get<Real>();
      } else if (key == "epsilon") {
        spec.sparsify_epsilon = value.get<Real>();
      } else if (key == "topk") {
        if (value.get<int>() > 0) spec.sparsify_topk = value.get<int>();
      } else {
        throw ValidationError("config: unknown view key: " + key);
      }
    }
  }
  spec.coefficients.kind = spec.view == ViewKind::kHeat ? DiffusionCoefficients::Kind::kHeat
                                                        : DiffusionCoefficients::Kind::kPpr;
  return spec;
}

json view_to_json(const ViewSpec& spec) {
  json j;
  j["view"] = to_string(spec.view);
  if (spec.view == ViewKind::kPpr) j["alpha"] = spec.coefficients.alpha;
  if (spec.view == ViewKind::kHeat) j["t"] = spec.coefficients.t;
  if (spec.sparsify_epsilon > 0.0) j["epsilon"] = spec.sparsify_epsilon;
  if (spec.sparsify_topk) j["topk"] = *spec.sparsify_topk;
  return j;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Flat key=value files share the JSON key names; view parameters
// (alpha/t/epsilon/topk) apply to every diffusion view listed.
json flat_to_json(const std::string& text) {
  json j;
  Real alpha = 0.2, t = 5.0, epsilon = 0.0;
  int topk = 0;
  std::vector<std::string> views;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    check_arg(eq != std::string::npos,
              "config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key == "views") {
      std::istringstream vs(value);
      std::string tok;
      while (std::getline(vs, tok, ',')) views.push_back(trim(tok));
    } else if (key == "alpha") {
      alpha = std::stod(value);
    } else if (key == "t") {
      t = std::stod(value);
    } else if (key == "epsilon") {
      epsilon = std::stod(value);
    } else if (key == "topk") {
      topk = std::stoi(value);
    } else if (key == "mode" || key == "estimator" || key == "encoder_sharing" ||
               key == "discriminator" || key == "pooling" || key == "feature_policy") {
      j[key] = value;
    } else if (key == "random_view_pairs" || key == "strict_deterministic") {
      j[key] = value == "true" || value == "1";
    } else if (key == "lr" || key == "temperature") {
      j[key] = std::stod(value);
    } else if (key == "seed") {
      j[key] = static_cast<uint64_t>(std::stoull(value));
    } else if (key == "layers" || key == "epochs" || key == "batch_size" ||
               key == "patience" || key == "hidden" || key == "subsample_nodes" ||
               key == "max_degree" || key == "dense_cap" || key == "workers") {
      j[key] = std::stoi(value);
    } else {
      throw ValidationError("config: unknown key: " + key);
    }
  }
  json jviews = json::array();
  for (const auto& name : views) {
    json v;
    v["view"] = name;
    if (name == "ppr") v["alpha"] = alpha;
    if (name == "heat") v["t"] = t;
    if (epsilon > 0.0) v["epsilon"] = epsilon;
    if (topk > 0) v["topk"] = topk;
    jviews.push_back(v);
  }
  if (!jviews.empty()) j["views"] = jviews;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "views") {
      cfg.views.clear();
      for (const auto& v : value) cfg.views.push_back(view_from_json(v));
    } else if (key == "mode") {
      cfg.mode = contrastive_mode_from_string(value.get<std::string>());
    } else if (key == "estimator") {
      cfg.estimator.kind = estimator_from_string(value.get<std::string>());
    } else if (key == "temperature") {
      cfg.estimator.temperature = value.get<Real>();
    } else if (key == "layers") {
      cfg.layers = value.get<int>();
    } else if (key == "epochs") {
      cfg.epochs = value.get<int>();
    } else if (key == "batch_size") {
      cfg.batch_size = value.get<int>();
    } else if (key == "lr") {
      cfg.lr = value.get<Real>();
    } else if (key == "patience") {
      cfg.patience = value.get<int>();
    } else if (key == "hidden") {
      cfg.hidden = value.get<int>();
    } else if (key == "seed") {
      cfg.seed = value.get<uint64_t>();
    } else if (key == "subsample_nodes") {
      cfg.subsample_nodes = value.get<int>();
    } else if (key == "encoder_sharing") {
      cfg.encoder_sharing = encoder_sharing_from_string(value.get<std::string>());
    } else if (key == "discriminator") {
      cfg.discriminator = discriminator_mode_from_string(value.get<std::string>());
    } else if (key == "pooling") {
      cfg.pooling = pooling_from_string(value.get<std::string>());
    } else if (key == "feature_policy") {
      cfg.feature_policy = feature_policy_from_string(value.get<std::string>());
    } else if (key == "max_degree") {
      cfg.max_degree = value.get<int>();
    } else if (key == "dense_cap") {
      cfg.dense_cap = value.get<int>();
    } else if (key == "random_view_pairs") {
      cfg.random_view_pairs = value.get<bool>();
    } else if (key == "strict_deterministic") {
      cfg.strict_deterministic = value.get<bool>();
    } else if (key == "workers") {
      cfg.workers = value.get<int>();
    } else {
      throw ValidationError("config: unknown key: " + key);
    }
  }
  return cfg;
}

}  // namespace

TrainConfig train_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

TrainConfig parse_train_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  check_run(static_cast<bool>(in), "cannot open config: " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return train_config_from_json_text(text);
  }
  return config_from_json(flat_to_json(text));
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["views"] = json::array();
  for (const auto& v : cfg.views) j["views"].push_back(view_to_json(v));
  j["mode"] = to_string(cfg.mode);
  j["estimator"] = to_string(cfg.estimator.kind);
  j["temperature"] = cfg.estimator.temperature;
  j["layers"] = cfg.layers;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["patience"] = cfg.patience;
  j["hidden"] = cfg.hidden;
  j["seed"] = cfg.seed;
  j["subsample_nodes"] = cfg.subsample_nodes;
  j["encoder_sharing"] = to_string(cfg.encoder_sharing);
  j["discriminator"] = to_string(cfg.discriminator);
  j["pooling"] = to_string(cfg.pooling);
  j["feature_policy"] = to_string(cfg.feature_policy);
  j["max_degree"] = cfg.max_degree;
  j["dense_cap"] = cfg.dense_cap;
  j["random_view_pairs"] = cfg.random_view_pairs;
  j["strict_deterministic"] = cfg.strict_deterministic;
  j["workers"] = cfg.workers;
  return j.dump(2) + "\n";
}

}  // namespace mvgrl
