#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "magcnn/common.hpp"
#include "magcnn/model.hpp"

namespace magcnn {

// Run configuration. Zeros mean "resolve from the dataset": N from the
// average node count, K from the dataset family, w1..w3 from the motif
// count percentiles measured during preprocessing.
struct RunConfig {
  std::string dataset;
  std::string data_dir;
  ModelKind model = ModelKind::kMagcnn;

  int n_central = 0;  // N
  int k_max = 0;      // K
  int w1 = 0, w2 = 0, w3 = 0;

  int k1 = 16;
  int k2 = 8;
  int f1 = 128;
  int f2 = 64;
  int s_heads = 8;

  double learning_rate = 0.001;
  double momentum = 0.9;
  double dropout = 0.5;  // drop rate; keep probability is 1 - dropout
  double weight_decay = 0.01;
  double leaky_slope = 0.2;

  int epochs = 0;      // 0 -> dataset default
  int batch_size = 0;  // 0 -> dataset default
  std::uint64_t seed = 0;

  std::string feature_scheme = "auto";  // auto | onehot | degree

  void validate() const {
    if (model != ModelKind::kMgcnn && model != ModelKind::kMagcnn) {
      throw ConfigError("unknown model kind");
    }
    if (epochs != 0 && (epochs < 20 || epochs > 500)) {
      throw ConfigError("epochs must lie in [20, 500]");
    }
    if (batch_size != 0 && (batch_size < 45 || batch_size > 450)) {
      throw ConfigError("batch_size must lie in [45, 450]");
    }
    const bool any_w = w1 || w2 || w3;
    const bool all_w = w1 && w2 && w3;
    if (any_w && !all_w) {
      throw ConfigError("set either all of w1,w2,w3 or none");
    }
    if (all_w) {
      NormalizationParams{std::max(2, n_central), std::max(3, k_max), w1, w2,
                          w3}
          .validate();
    }
    if (n_central != 0 && n_central < 2) throw ConfigError("N must be >= 2");
    if (k_max != 0 && k_max < 3) throw ConfigError("K must be >= 3");
    if (k_max > 20) throw ConfigError("K is capped at 20");
    if (k1 < 1 || k2 < 1 || f1 < 1 || f2 < 1 || s_heads < 1) {
      throw ConfigError("K1, K2, F1, F2, S must be positive");
    }
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) {
      throw ConfigError("momentum must lie in [0, 1)");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
      throw ConfigError("dropout must lie in [0, 1)");
    }
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
    if (feature_scheme != "auto" && feature_scheme != "onehot" &&
        feature_scheme != "degree") {
      throw ConfigError("feature_scheme must be auto, onehot or degree");
    }
  }
};

inline ModelKind parse_model_kind(const std::string& name) {
  if (name == "mgcnn") return ModelKind::kMgcnn;
  if (name == "magcnn") return ModelKind::kMagcnn;
  throw ConfigError("unknown model '" + name + "' (use mgcnn or magcnn)");
}

namespace detail {

inline int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
}

inline double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': bad number '" + value + "'");
}

inline std::uint64_t to_u64(const std::string& key,
                            const std::string& value) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(value, &pos);
    if (pos == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': bad seed '" + value + "'");
}

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::to_double;
  using detail::to_int;
  using detail::to_u64;
  if (key == "dataset") cfg.dataset = value;
  else if (key == "data_dir") cfg.data_dir = value;
  else if (key == "model") cfg.model = parse_model_kind(value);
  else if (key == "N") cfg.n_central = to_int(key, value);
  else if (key == "K") cfg.k_max = to_int(key, value);
  else if (key == "w1") cfg.w1 = to_int(key, value);
  else if (key == "w2") cfg.w2 = to_int(key, value);
  else if (key == "w3") cfg.w3 = to_int(key, value);
  else if (key == "K1") cfg.k1 = to_int(key, value);
  else if (key == "K2") cfg.k2 = to_int(key, value);
  else if (key == "F1") cfg.f1 = to_int(key, value);
  else if (key == "F2") cfg.f2 = to_int(key, value);
  else if (key == "S") cfg.s_heads = to_int(key, value);
  else if (key == "learning_rate") cfg.learning_rate = to_double(key, value);
  else if (key == "momentum") cfg.momentum = to_double(key, value);
  else if (key == "dropout") cfg.dropout = to_double(key, value);
  else if (key == "weight_decay") cfg.weight_decay = to_double(key, value);
  else if (key == "leaky_slope") cfg.leaky_slope = to_double(key, value);
  else if (key == "epochs") cfg.epochs = to_int(key, value);
  else if (key == "batch_size") cfg.batch_size = to_int(key, value);
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "feature_scheme") cfg.feature_scheme = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

// Plain "key = value" lines; '#' starts a comment; unknown keys are errors.
inline RunConfig parse_config_file(const std::filesystem::path& path,
                                   RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = detail::trim(trimmed.substr(0, eq));
    const std::string value = detail::trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": empty key");
    }
    apply_config_entry(base, key, value);
  }
  return base;
}

// Fill the zero slots from dataset knowledge: N is the rounded average node
// count, K is 10 for labeled (bio) and 20 for unlabeled (social) data, and
// the batch/epoch defaults follow the bundled per-dataset settings.
inline void resolve_dataset_defaults(RunConfig& cfg, double avg_nodes,
                                     bool has_node_labels) {
  if (cfg.n_central == 0) {
    cfg.n_central = std::max(2, static_cast<int>(std::lround(avg_nodes)));
  }
  if (cfg.k_max == 0) cfg.k_max = has_node_labels ? 10 : 20;
  if (cfg.epochs == 0) cfg.epochs = 200;
  if (cfg.batch_size == 0) {
    cfg.batch_size = cfg.dataset.rfind("PTC", 0) == 0 ? 46 : 45;
  }
  if (cfg.feature_scheme == "auto") {
    cfg.feature_scheme = has_node_labels ? "onehot" : "degree";
  }
}

// Deterministic key -> value echo for reports.
inline std::map<std::string, std::string> config_echo(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  out["dataset"] = cfg.dataset;
  out["data_dir"] = cfg.data_dir;
  out["model"] = model_kind_name(cfg.model);
  out["N"] = std::to_string(cfg.n_central);
  out["K"] = std::to_string(cfg.k_max);
  out["w1"] = std::to_string(cfg.w1);
  out["w2"] = std::to_string(cfg.w2);
  out["w3"] = std::to_string(cfg.w3);
  out["K1"] = std::to_string(cfg.k1);
  out["K2"] = std::to_string(cfg.k2);
  out["F1"] = std::to_string(cfg.f1);
  out["F2"] = std::to_string(cfg.f2);
  out["S"] = std::to_string(cfg.s_heads);
  out["learning_rate"] = format_fixed6(cfg.learning_rate);
  out["momentum"] = format_fixed6(cfg.momentum);
  out["dropout"] = format_fixed6(cfg.dropout);
  out["weight_decay"] = format_fixed6(cfg.weight_decay);
  out["leaky_slope"] = format_fixed6(cfg.leaky_slope);
  out["epochs"] = std::to_string(cfg.epochs);
  out["batch_size"] = std::to_string(cfg.batch_size);
  out["seed"] = std::to_string(cfg.seed);
  out["feature_scheme"] = cfg.feature_scheme;
  return out;
}

}  // namespace magcnn
