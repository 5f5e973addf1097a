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

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

namespace dynamark::model {

enum class FeatureType { kBssl, kLogMel };

struct ModelConfig {
  std::size_t input_bins = 22;
  std::size_t scaling_factor = 5;
  std::size_t channels = 20;
  std::size_t blocks_per_branch = 2;
  std::size_t attention_dim = 8;
  std::size_t latent_dim = 8;
  std::size_t num_experts = 8;
  std::size_t num_tasks = 4;
  std::size_t num_dynamic_classes = 6;
  bool use_mmoe = true;

  // Throws ConfigError naming the offending field.
  void validate() const;
  FeatureType feature_type() const { return input_bins == 128 ? FeatureType::kLogMel : FeatureType::kBssl; }
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

}  // namespace dynamark::model
