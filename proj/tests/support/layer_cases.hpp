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

#include <random>
#include <vector>

#include "support/gradcheck.hpp"

namespace dynamark::testing {

// Small random inputs and parameters for one layer kind.
struct LayerCase {
  std::vector<DTensor> inputs;
  std::vector<DTensor> params;
  tensor::LayerOptions options;
};

inline LayerCase make_case(tensor::LayerKind kind, std::mt19937_64& rng) {
  using tensor::LayerKind;
  LayerCase c;
  switch (kind) {
    case LayerKind::kConv1d:
      c.inputs = {random_tensor({2, 3, 7}, rng)};
      c.params = {random_tensor({4, 3, 3}, rng), random_tensor({4}, rng)};
      break;
    case LayerKind::kConv2d:
      c.inputs = {random_tensor({2, 2, 4, 5}, rng)};
      c.params = {random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)};
      break;
    case LayerKind::kConvTranspose1d:
      c.inputs = {random_tensor({2, 3, 4}, rng)};
      c.params = {random_tensor({3, 2, 3}, rng), random_tensor({2}, rng)};
      c.options.stride = 3;
      break;
    case LayerKind::kLinear:
      c.inputs = {random_tensor({2, 3, 5}, rng)};
      c.params = {random_tensor({4, 5}, rng), random_tensor({4}, rng)};
      break;
    case LayerKind::kRelu:
      c.inputs = {off_kink_tensor({3, 7}, rng)};
      break;
    case LayerKind::kSoftmax:
      c.inputs = {random_tensor({3, 6}, rng, -2.0, 2.0)};
      break;
    case LayerKind::kBatchNorm2d:
      c.inputs = {random_tensor({2, 3, 2, 4}, rng)};
      c.params = {random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng)};
      break;
    case LayerKind::kMaxPool1d:
      c.inputs = {distinct_tensor({2, 3, 11}, rng)};
      c.options.stride = 3;
      break;
    case LayerKind::kAdd:
      c.inputs = {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)};
      break;
    case LayerKind::kConcat:
      c.inputs = {random_tensor({2, 3, 2}, rng), random_tensor({2, 1, 2}, rng), random_tensor({2, 4, 2}, rng)};
      c.options.axis = 1;
      break;
    case LayerKind::kLayerNorm:
      c.inputs = {random_tensor({3, 5}, rng)};
      c.params = {random_tensor({5}, rng, 0.5, 1.5), random_tensor({5}, rng)};
      break;
    case LayerKind::kAttention:
      c.inputs = {random_tensor({2, 5, 3}, rng), random_tensor({2, 6, 3}, rng), random_tensor({2, 6, 4}, rng)};
      break;
  }
  return c;
}

}  // namespace dynamark::testing
