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

#include "dynamark/tensor/parameter_store.hpp"

namespace dynamark::tensor {

Tensor<float>& ParameterStore::add(const std::string& name, Shape shape) {
  auto [it, inserted] = params_.emplace(name, Tensor<float>::zeros(std::move(shape), true));
  if (!inserted) throw ShapeError("ParameterStore::add: expected a new name, got duplicate '" + name + "'");
  return it->second;
}

Tensor<float>& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("ParameterStore::get: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor<float>& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("ParameterStore::get: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& [_, t] : params_) t.zero_grad();
}

std::size_t fan_in(const Shape& weight_shape) {
  if (weight_shape.size() < 2) return weight_shape.empty() ? 1 : weight_shape[0];
  std::size_t n = weight_shape[1];
  for (std::size_t i = 2; i < weight_shape.size(); ++i) n *= weight_shape[i];
  return n;
}

void uniform_fill(std::span<float> out, float bound, std::mt19937_64& rng) {
  for (auto& v : out) {
    // 53 random bits -> [0, 1).
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v = static_cast<float>((2.0 * u - 1.0) * bound);
  }
}

}  // namespace dynamark::tensor
