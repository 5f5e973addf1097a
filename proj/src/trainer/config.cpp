// Copyright 2026 The Dynamark Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynamark/trainer/config.hpp"

#include <charconv>
#include <sstream>

#include "dynamark/common/error.hpp"
#include "dynamark/model/network.hpp"

namespace dynamark::trainer {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train config: lr must be > 0");
  if (batch_size == 0) throw ConfigError("train config: batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("train config: epochs must be >= 1");
  if (!(segment_s > 0.0)) throw ConfigError("train config: segment_s must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("train config: betas must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be >= 0");
  bool any = false;
  for (bool e : enabled_tasks) any |= e;
  if (!any) throw ConfigError("train config: enabled_tasks must not be empty");
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  nlohmann::json tasks = nlohmann::json::array();
  for (std::size_t i = 0; i < 4; ++i) {
    if (cfg.enabled_tasks[i]) tasks.push_back(model::kTaskNames[i]);
  }
  j = nlohmann::json{{"lr", cfg.lr},
                     {"batch_size", cfg.batch_size},
                     {"epochs", cfg.epochs},
                     {"seed", cfg.seed},
                     {"beta1", cfg.beta1},
                     {"beta2", cfg.beta2},
                     {"eps", cfg.eps},
                     {"weight_decay", cfg.weight_decay},
                     {"segment_s", cfg.segment_s},
                     {"augment_overlap", cfg.augment_overlap},
                     {"enabled_tasks", tasks},
                     {"folds", cfg.folds}};
}

namespace {

std::array<bool, 4> parse_tasks(const std::vector<std::string>& names) {
  std::array<bool, 4> out{false, false, false, false};
  for (const auto& n : names) {
    bool found = false;
    for (std::size_t i = 0; i < 4; ++i) {
      if (n == model::kTaskNames[i]) {
        out[i] = true;
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown task '" + n + "' (expected dynamics, change_point, beat, downbeat)");
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': invalid value '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  TrainConfig d;
  cfg.lr = j.value("lr", d.lr);
  cfg.batch_size = j.value("batch_size", d.batch_size);
  cfg.epochs = j.value("epochs", d.epochs);
  cfg.seed = j.value("seed", d.seed);
  cfg.beta1 = j.value("beta1", d.beta1);
  cfg.beta2 = j.value("beta2", d.beta2);
  cfg.eps = j.value("eps", d.eps);
  cfg.weight_decay = j.value("weight_decay", d.weight_decay);
  cfg.segment_s = j.value("segment_s", d.segment_s);
  cfg.augment_overlap = j.value("augment_overlap", d.augment_overlap);
  cfg.folds = j.value("folds", d.folds);
  if (j.contains("enabled_tasks")) cfg.enabled_tasks = parse_tasks(j["enabled_tasks"].get<std::vector<std::string>>());
}

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + " line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + " line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_key_values(const std::map<std::string, std::string>& kv, model::ModelConfig& m, TrainConfig& t) {
  for (const auto& [key, v] : kv) {
    if (key == "input_bins") m.input_bins = parse_value<std::size_t>(key, v);
    else if (key == "feature") {
      if (v == "bssl") m.input_bins = 22;
      else if (v == "logmel") m.input_bins = 128;
      else throw ConfigError("config key 'feature': expected bssl or logmel, got '" + v + "'");
    } else if (key == "scaling_factor") m.scaling_factor = parse_value<std::size_t>(key, v);
    else if (key == "channels") m.channels = parse_value<std::size_t>(key, v);
    else if (key == "blocks_per_branch") m.blocks_per_branch = parse_value<std::size_t>(key, v);
    else if (key == "attention_dim") m.attention_dim = parse_value<std::size_t>(key, v);
    else if (key == "use_mmoe") m.use_mmoe = parse_bool(key, v);
    else if (key == "lr") t.lr = parse_value<double>(key, v);
    else if (key == "batch_size") t.batch_size = parse_value<std::size_t>(key, v);
    else if (key == "epochs") t.epochs = parse_value<std::size_t>(key, v);
    else if (key == "seed") t.seed = parse_value<std::uint64_t>(key, v);
    else if (key == "beta1") t.beta1 = parse_value<double>(key, v);
    else if (key == "beta2") t.beta2 = parse_value<double>(key, v);
    else if (key == "eps") t.eps = parse_value<double>(key, v);
    else if (key == "weight_decay") t.weight_decay = parse_value<double>(key, v);
    else if (key == "segment_s") t.segment_s = parse_value<double>(key, v);
    else if (key == "augment_overlap") t.augment_overlap = parse_bool(key, v);
    else if (key == "folds") t.folds = parse_value<std::size_t>(key, v);
    else if (key == "enabled_tasks") {
      std::vector<std::string> names;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!trim(item).empty()) names.push_back(trim(item));
      }
      t.enabled_tasks = parse_tasks(names);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

}  // namespace dynamark::trainer
