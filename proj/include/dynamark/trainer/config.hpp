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

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "dynamark/model/config.hpp"

namespace dynamark::trainer {

struct TrainConfig {
  double lr = 3e-4;
  std::size_t batch_size = 10;
  std::size_t epochs = 120;
  std::uint64_t seed = 86;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double segment_s = 60.0;
  bool augment_overlap = true;
  // dynamics, change_point, beat, downbeat
  std::array<bool, 4> enabled_tasks{true, true, true, true};
  std::size_t folds = 5;

  void validate() const;
  double train_overlap() const { return augment_overlap ? 0.5 : 0.0; }
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

// Parses flat "key = value" text; '#' starts a comment. Throws ConfigError
// with the line number on malformed lines.
std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source = "config");

// Applies known keys to the configs; unknown keys raise ConfigError.
// Model keys: input_bins, feature (bssl|logmel), scaling_factor, channels,
// blocks_per_branch, attention_dim, use_mmoe.
// Train keys: lr, batch_size, epochs, seed, beta1, beta2, eps, weight_decay,
// segment_s, augment_overlap, enabled_tasks (comma list of task names), folds.
void apply_key_values(const std::map<std::string, std::string>& kv, model::ModelConfig& model_cfg,
                      TrainConfig& train_cfg);

}  // namespace dynamark::trainer
