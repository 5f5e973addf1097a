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
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace dynamark::metrics {

inline constexpr double kEventTolerance = 0.070;

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// Precision is tp / (tp + fp), or 1 when nothing was predicted and nothing
// was missed (0 otherwise); recall is symmetric. F1 is 0 when P + R = 0.
F1Result make_f1(std::size_t tp, std::size_t fp, std::size_t fn);

// Maximum one-to-one matching of predicted and reference times with
// |pred - ref| <= tol. Both lists must be ascending.
F1Result event_f1(std::span<const double> pred, std::span<const double> ref, double tol = kEventTolerance);

struct DynamicsF1 {
  // Index c - 1 holds class c (pp..ff); nullopt when the class appears in
  // neither the reference nor the predictions.
  std::array<std::optional<F1Result>, 5> per_class;
  // Mean over classes present in the reference; nullopt when the reference
  // has no non-blank beat.
  std::optional<double> macro;
};

// Labels per ground-truth beat in {0 = blank, 1..5}. Beats whose reference is
// blank are skipped.
DynamicsF1 dynamics_macro_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref);

// Exact index-set comparison; both empty gives F1 = 1.
F1Result changepoint_f1(std::span<const std::size_t> pred, std::span<const std::size_t> ref);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};
MeanStd mean_std(std::span<const double> values);

nlohmann::json to_json(const F1Result& r);
nlohmann::json to_json(const DynamicsF1& r);

}  // namespace dynamark::metrics
