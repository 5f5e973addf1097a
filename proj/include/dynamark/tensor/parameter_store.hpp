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
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dynamark/tensor/tensor.hpp"

namespace dynamark::tensor {

// Named trainable tensors. Iteration is lexicographic by name.
class ParameterStore {
 public:
  using Map = std::map<std::string, Tensor<float>>;

  Tensor<float>& add(const std::string& name, Shape shape);
  Tensor<float>& get(const std::string& name);
  const Tensor<float>& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grads();

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

 private:
  Map params_;
};

// Fan-in of a weight tensor, PyTorch convention: dims[1] * prod(dims[2:]).
std::size_t fan_in(const Shape& weight_shape);

// U(-bound, bound) fill from a 64-bit Mersenne Twister. The mapping from raw
// engine output to floats is done here so results do not depend on the
// standard library's distribution implementation.
void uniform_fill(std::span<float> out, float bound, std::mt19937_64& rng);

}  // namespace dynamark::tensor
