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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamark/model/network.hpp"

namespace dynamark::trainer {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  tensor::Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  model::ModelConfig model;
  // Free-form metadata: train config, epoch, validation summary.
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, NamedTensor> tensors;  // parameters and batchnorm running statistics
};

// Snapshot of a network's parameters and running statistics.
Checkpoint capture(const model::Network& net, nlohmann::json meta = nlohmann::json::object());

// Copies tensors into an existing network. Names and shapes must match exactly.
void restore(model::Network& net, const Checkpoint& cp);
model::Network instantiate(const Checkpoint& cp);

// "DYNC" | u32 version | u32 crc32 of the rest | u32 config length | config JSON |
// u32 tensor count | per tensor: u16 name length, name, u8 rank, u32 dims, f32 payload.
std::vector<std::uint8_t> serialize(const Checkpoint& cp);
Checkpoint deserialize(std::span<const std::uint8_t> bytes, const std::string& source = "checkpoint");

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);
// Throws VersionError, ChecksumError or SchemaError; nothing is returned on failure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dynamark::trainer
