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
#include <utility>
#include <vector>

#include "dynamark/model/config.hpp"
#include "dynamark/tensor/ops.hpp"
#include "dynamark/tensor/parameter_store.hpp"

namespace dynamark::model {

using FTensor = tensor::Tensor<float>;

enum Task : std::size_t { kDynamics = 0, kChangePoint = 1, kBeat = 2, kDownbeat = 3 };
inline constexpr std::array<const char*, 4> kTaskNames = {"dynamics", "change_point", "beat", "downbeat"};

// Raw logits. dynamics: [B, T, C]; the binary tasks: [B, T].
struct TaskLogits {
  FTensor dynamics;
  FTensor change_point;
  FTensor beat;
  FTensor downbeat;
};

struct MmoeOutput {
  std::vector<FTensor> task_features;  // num_tasks x [B, T, 8]
  std::vector<FTensor> gates;          // num_tasks x [B, T, num_experts]
  FTensor experts;                     // [B, T, num_experts, 8]
};

struct ForwardResult {
  TaskLogits logits;
  FTensor latent;  // [B, T, 8]
  MmoeOutput mmoe;  // empty when use_mmoe is false
  std::array<std::size_t, 3> branch_lengths{};
};

// Every trainable tensor the configuration creates, by name.
std::vector<std::pair<std::string, tensor::Shape>> parameter_shapes(const ModelConfig& cfg);

// Exact scalar parameter count (batchnorm running statistics excluded).
std::size_t param_count(const ModelConfig& cfg);

// Three-branch multi-scale encoder, MMoE decoder and four linear heads.
class Network {
 public:
  Network(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  tensor::ParameterStore& params() { return params_; }
  const tensor::ParameterStore& params() const { return params_; }
  std::map<std::string, tensor::BatchNormState<float>>& bn_states() { return bn_; }
  const std::map<std::string, tensor::BatchNormState<float>>& bn_states() const { return bn_; }

  // features: [B, F, T]. Training mode uses batch statistics in every
  // batchnorm and updates the running estimates.
  ForwardResult forward(const FTensor& features, bool training);

  // Latent sequence [B, T, 8].
  FTensor encode(const FTensor& features, bool training, std::array<std::size_t, 3>* branch_lengths = nullptr);
  MmoeOutput mmoe(const FTensor& latent);
  TaskLogits heads(const std::vector<FTensor>& task_features);

  // Number of max-pooling calls executed since construction.
  std::size_t pooling_ops() const { return pooling_ops_; }

 private:
  FTensor branch(std::size_t b, const FTensor& x, bool training);
  FTensor p(const std::string& name) { return params_.get(name); }

  ModelConfig cfg_;
  tensor::ParameterStore params_;
  std::map<std::string, tensor::BatchNormState<float>> bn_;
  std::size_t pooling_ops_ = 0;
};

}  // namespace dynamark::model
