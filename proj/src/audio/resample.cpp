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

#include "dynamark/audio/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "dynamark/common/error.hpp"

namespace dynamark::audio {

PolyphaseResampler::PolyphaseResampler(int in_rate, int out_rate, int taps_per_phase,
                                       double kaiser_beta, double rolloff)
    : taps_(taps_per_phase) {
  if (in_rate <= 0 || out_rate <= 0) throw ConfigError("resampler rates must be positive");
  if (taps_per_phase < 2 || taps_per_phase % 2 != 0) throw ConfigError("taps per phase must be even");
  const int g = std::gcd(in_rate, out_rate);
  up_ = out_rate / g;
  down_ = in_rate / g;

  // Cutoff as a fraction of the input Nyquist frequency.
  const double cutoff = std::min(1.0, static_cast<double>(up_) / down_) * rolloff;
  const double half = taps_ / 2.0;
  const double norm = std::cyl_bessel_i(0.0, kaiser_beta);
  bank_.resize(static_cast<std::size_t>(up_) * taps_);
  for (int p = 0; p < up_; ++p) {
    const double frac = static_cast<double>(p) / up_;
    double total = 0.0;
    std::vector<double> phase(taps_);
    for (int i = 0; i < taps_; ++i) {
      const double u = frac + half - 1.0 - i;  // distance from output instant to tap, in input samples
      const double r = u / half;
      const double window = std::abs(r) >= 1.0
                                ? 0.0
                                : std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(1.0 - r * r)) / norm;
      const double x = cutoff * u;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      phase[i] = cutoff * sinc * window;
      total += phase[i];
    }
    for (int i = 0; i < taps_; ++i) bank_[static_cast<std::size_t>(p) * taps_ + i] = static_cast<float>(phase[i] / total);
  }
}

std::size_t PolyphaseResampler::output_length(std::size_t input_length) const {
  const auto num = static_cast<unsigned long long>(input_length) * static_cast<unsigned long long>(up_);
  return static_cast<std::size_t>((num + down_ - 1) / down_);
}

std::vector<float> PolyphaseResampler::process(std::span<const float> input) const {
  const std::size_t n_out = output_length(input.size());
  std::vector<float> out(n_out);
  const auto n_in = static_cast<long long>(input.size());
  const long long half = taps_ / 2;
  for (std::size_t n = 0; n < n_out; ++n) {
    const auto pos = static_cast<unsigned long long>(n) * static_cast<unsigned long long>(down_);
    const auto base = static_cast<long long>(pos / up_);
    const auto phase = static_cast<std::size_t>(pos % up_);
    const float* h = bank_.data() + phase * taps_;
    const long long first = base - half + 1;
    double acc = 0.0;
    if (first >= 0 && first + taps_ <= n_in) {
      const float* x = input.data() + first;
      for (int i = 0; i < taps_; ++i) acc += static_cast<double>(h[i]) * x[i];
    } else {
      for (int i = 0; i < taps_; ++i) {
        const long long k = first + i;
        if (k >= 0 && k < n_in) acc += static_cast<double>(h[i]) * input[static_cast<std::size_t>(k)];
      }
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

std::vector<float> resample(std::span<const float> input, int in_rate, int out_rate) {
  if (in_rate == out_rate) return {input.begin(), input.end()};
  return PolyphaseResampler(in_rate, out_rate).process(input);
}

}  // namespace dynamark::audio
