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
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dynamark/tensor/tensor.hpp"

namespace dynamark::objectives {

using Mask = std::vector<std::uint8_t>;

// Per-frame supervision for one sequence. `valid` is 0 on padded frames,
// which take part in neither loss nor metrics.
struct FrameTargets {
  Mask beat;
  Mask downbeat;
  Mask change_point;
  std::vector<std::uint8_t> dynamic_class;  // 0 = blank, 1..5 = pp..ff
  Mask beat_mask;
  Mask valid;

  std::size_t frames() const { return beat.size(); }
  static FrameTargets empty(std::size_t frames);
};

inline constexpr std::size_t kDefaultTolerance = 3;
inline constexpr double kMinPosWeight = 1.0;
inline constexpr double kMaxPosWeight = 100.0;

// Negatives closer than this to a positive are left out of the loss.
inline constexpr std::size_t exclusion_radius(std::size_t tolerance) { return 2 * tolerance; }

// Ratio of contributing negative terms to positive terms over the batch,
// clamped to [1, 100]. Returns 1 when there are no positives.
double default_pos_weight(std::span<const Mask> targets, std::span<const Mask> valid,
                          std::size_t tolerance = kDefaultTolerance);

// Shift-tolerant weighted BCE. logits: [B, T] (or [T] for B = 1).
// Each logit is first max-pooled over +-tolerance valid frames. Positive
// frames contribute -pos_weight * log sigmoid(pooled); frames farther than
// 2 * tolerance from every positive contribute -log(1 - sigmoid(pooled)).
// The result is the sum divided by the number of contributing frames.
// `valid` may be empty (all frames valid).
template <typename T>
tensor::Tensor<T> shift_tolerant_wbce(const tensor::Tensor<T>& logits, std::span<const Mask> targets,
                                      std::span<const Mask> valid, std::size_t tolerance, double pos_weight);

// Mean cross-entropy over frames with mask = 1; 0 when no frame is masked.
// logits: [B, T, C] (or [T, C]). Throws InputError for a class id >= C at a masked frame.
template <typename T>
tensor::Tensor<T> masked_ce(const tensor::Tensor<T>& logits,
                            std::span<const std::vector<std::uint8_t>> classes, std::span<const Mask> mask);

struct LossConfig {
  std::array<bool, 4> enabled{true, true, true, true};  // dynamics, change_point, beat, downbeat
  std::size_t tolerance = kDefaultTolerance;
};

struct LossReport {
  tensor::Tensor<float> total;
  double dyn = 0.0;
  double cpt = 0.0;
  double beat = 0.0;
  double dbt = 0.0;

  double total_value() const { return dyn + cpt + beat + dbt; }
};

// Unweighted sum of the enabled terms. Disabled terms are reported as 0 and
// contribute no gradient. dynamics: [B, T, 6]; the others [B, T].
LossReport multitask_loss(const tensor::Tensor<float>& dynamics, const tensor::Tensor<float>& change_point,
                          const tensor::Tensor<float>& beat, const tensor::Tensor<float>& downbeat,
                          std::span<const FrameTargets> targets, const LossConfig& cfg = {});

}  // namespace dynamark::objectives
