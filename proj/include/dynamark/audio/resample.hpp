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

#include <span>
#include <vector>

namespace dynamark::audio {

// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
// Each output sample is an inner product of `taps_per_phase` input samples
// with one of L precomputed phases, where L/M = out_rate/in_rate in lowest terms.
class PolyphaseResampler {
 public:
  PolyphaseResampler(int in_rate, int out_rate, int taps_per_phase = 64, double kaiser_beta = 9.0,
                     double rolloff = 0.92);

  std::vector<float> process(std::span<const float> input) const;

  int up() const { return up_; }
  int down() const { return down_; }
  std::size_t output_length(std::size_t input_length) const;

 private:
  int up_ = 1;
  int down_ = 1;
  int taps_ = 64;
  std::vector<float> bank_;  // up_ x taps_
};

std::vector<float> resample(std::span<const float> input, int in_rate, int out_rate);

}  // namespace dynamark::audio
