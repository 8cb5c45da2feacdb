// Copyright 2026 The litebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LITEBOUND_CONFIG_HPP
#define LITEBOUND_CONFIG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "litebound/error.hpp"
#include "litebound/losses.hpp"
#include "litebound/student.hpp"

namespace litebound {

/// Configuration rejected; `keys` lists every offending key path.
class ConfigValidationError : public ConfigError {
public:
  explicit ConfigValidationError(std::vector<std::string> keys)
      : ConfigError(format(keys)), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const noexcept { return keys_; }

private:
  static std::string format(const std::vector<std::string>& keys) {
    std::string s = "invalid configuration keys:";
    for (const auto& k : keys) s += " " + k;
    return s;
  }
  std::vector<std::string> keys_;
};

/// Everything a run needs. Serialised as JSON with one object per section.
struct RunConfig {
  struct Data {
    std::string root;  // contains train/ and test/ (or images/ + masks/)
  } data;
  struct Teachers {
    std::vector<std::string> bank{"edge_bank", "gaussian_pyramid", "random_conv"};
    std::uint64_t seed = 11;
  } teachers;
  struct Distill {
    bool enabled = true;
    int width = 64;
    std::uint64_t projection_seed = 1;
    double cutoff_ratio = 0.25;
  } distill;
  struct Model {
    int base_width = 8;
  } model;
  struct Loss {
    std::vector<double> lambdas{kDefaultLambdas.begin(), kDefaultLambdas.end()};
  } loss;
  struct Schedule {
    std::array<int, 3> phase_epochs{40, 40, 40};
    double scale = 1.0;
    int batch_size = 8;
    double lr = 1e-4;
    double lr_decay = 1.0;  // per-epoch multiplicative factor; 1 disables decay
  } schedule;
  struct Augment {
    bool enabled = true;
  } augment;
  std::uint64_t seed = 0;
  std::string precision = "float";  // float | double
  int threads = 1;

  StudentConfig student_config() const { return {model.base_width, distill.width, seed}; }
  LossWeights lambda_array() const {
    LossWeights w{};
    for (std::size_t i = 0; i < 5 && i < loss.lambdas.size(); ++i) w[i] = loss.lambdas[i];
    return w;
  }
  /// Epochs per phase after scaling (each at least 1).
  std::array<int, 3> scaled_epochs() const {
    std::array<int, 3> e{};
    for (std::size_t i = 0; i < 3; ++i)
      e[i] = std::max(1, static_cast<int>(std::lround(phase_epochs_scaled(i))));
    return e;
  }

private:
  double phase_epochs_scaled(std::size_t i) const { return schedule.phase_epochs[i] * schedule.scale; }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"data", {{"root", c.data.root}}},
          {"teachers", {{"bank", c.teachers.bank}, {"seed", c.teachers.seed}}},
          {"distill",
           {{"enabled", c.distill.enabled},
            {"width", c.distill.width},
            {"projection_seed", c.distill.projection_seed},
            {"cutoff_ratio", c.distill.cutoff_ratio}}},
          {"model", {{"base_width", c.model.base_width}}},
          {"loss", {{"lambdas", c.loss.lambdas}}},
          {"schedule",
           {{"phase_epochs", c.schedule.phase_epochs},
            {"scale", c.schedule.scale},
            {"batch_size", c.schedule.batch_size},
            {"lr", c.schedule.lr},
            {"lr_decay", c.schedule.lr_decay}}},
          {"augment", {{"enabled", c.augment.enabled}}},
          {"seed", c.seed},
          {"precision", c.precision},
          {"threads", c.threads}};
}

namespace detail {

// Copies known keys from `src` into `dst` (which holds defaults); records
// unknown keys and type errors under their dotted path.
inline void merge_known(const nlohmann::json& src, nlohmann::json& dst, const std::string& prefix,
                        std::vector<std::string>& bad) {
  if (!src.is_object()) {
    bad.push_back(prefix.empty() ? "<root>" : prefix);
    return;
  }
  for (const auto& [key, value] : src.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!dst.contains(key)) {
      bad.push_back(path);
      continue;
    }
    auto& slot = dst[key];
    if (slot.is_object()) {
      merge_known(value, slot, path, bad);
    } else if (slot.is_number() && value.is_number()) {
      slot = value;
    } else if (slot.type() == value.type()) {
      slot = value;
    } else {
      bad.push_back(path);
    }
  }
}

}  // namespace detail

/// Validates and builds a configuration from JSON. Unknown keys are errors.
inline RunConfig parse_config(const nlohmann::json& j) {
  nlohmann::json merged = to_json(RunConfig{});
  std::vector<std::string> bad;
  detail::merge_known(j, merged, "", bad);
  RunConfig c;
  try {
    c.data.root = merged["data"]["root"].get<std::string>();
    c.teachers.bank = merged["teachers"]["bank"].get<std::vector<std::string>>();
    c.teachers.seed = merged["teachers"]["seed"].get<std::uint64_t>();
    c.distill.enabled = merged["distill"]["enabled"].get<bool>();
    c.distill.width = merged["distill"]["width"].get<int>();
    c.distill.projection_seed = merged["distill"]["projection_seed"].get<std::uint64_t>();
    c.distill.cutoff_ratio = merged["distill"]["cutoff_ratio"].get<double>();
    c.model.base_width = merged["model"]["base_width"].get<int>();
    c.loss.lambdas = merged["loss"]["lambdas"].get<std::vector<double>>();
    auto pe = merged["schedule"]["phase_epochs"].get<std::vector<int>>();
    if (pe.size() != 3) {
      bad.push_back("schedule.phase_epochs");
    } else {
      c.schedule.phase_epochs = {pe[0], pe[1], pe[2]};
    }
    c.schedule.scale = merged["schedule"]["scale"].get<double>();
    c.schedule.batch_size = merged["schedule"]["batch_size"].get<int>();
    c.schedule.lr = merged["schedule"]["lr"].get<double>();
    c.schedule.lr_decay = merged["schedule"]["lr_decay"].get<double>();
    c.augment.enabled = merged["augment"]["enabled"].get<bool>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.precision = merged["precision"].get<std::string>();
    c.threads = merged["threads"].get<int>();
  } catch (const nlohmann::json::exception&) {
    bad.push_back("<type>");
  }

  if (c.loss.lambdas.size() != 5) bad.push_back("loss.lambdas");
  for (double l : c.loss.lambdas)
    if (!(l >= 0.0)) {
      bad.push_back("loss.lambdas");
      break;
    }
  if (c.distill.width < 1) bad.push_back("distill.width");
  if (!(c.distill.cutoff_ratio > 0.0 && c.distill.cutoff_ratio < 1.0)) bad.push_back("distill.cutoff_ratio");
  if (c.model.base_width < 1) bad.push_back("model.base_width");
  for (int e : c.schedule.phase_epochs)
    if (e < 1) {
      bad.push_back("schedule.phase_epochs");
      break;
    }
  if (!(c.schedule.scale > 0.0)) bad.push_back("schedule.scale");
  if (c.schedule.batch_size < 1) bad.push_back("schedule.batch_size");
  if (!(c.schedule.lr >= 0.0)) bad.push_back("schedule.lr");
  if (!(c.schedule.lr_decay > 0.0 && c.schedule.lr_decay <= 1.0)) bad.push_back("schedule.lr_decay");
  if (c.precision != "float" && c.precision != "double") bad.push_back("precision");
  if (c.threads < 1) bad.push_back("threads");
  if (c.teachers.bank.empty()) bad.push_back("teachers.bank");
  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    throw ConfigValidationError(std::move(bad));
  }
  return c;
}

/// Applies a `dotted.key=value` override; the value is parsed as JSON when
/// possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigValidationError({assignment});
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigValidationError({key});
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = nlohmann::json::object();
  }
  (*node)[parts.back()] = value;
}

inline RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

inline void save_config(const std::filesystem::path& path, const RunConfig& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << to_json(c).dump(2) << '\n';
}

/// Identity of the trained architecture; stored in checkpoints.
inline std::string model_fingerprint(const RunConfig& c) {
  return nlohmann::json{{"arch", "unet-latent4"},
                        {"base_width", c.model.base_width},
                        {"latent_width", c.distill.width},
                        {"precision", c.precision}}
      .dump();
}

}  // namespace litebound

#endif  // LITEBOUND_CONFIG_HPP
