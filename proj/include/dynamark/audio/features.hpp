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

#include "dynamark/audio/wav.hpp"

namespace dynamark::audio {

inline constexpr int kFftSize = 1024;
inline constexpr int kHopSize = 441;
inline constexpr int kFramesPerSecond = 50;
inline constexpr int kNumFftBins = kFftSize / 2 + 1;
inline constexpr int kNumBarkBands = 22;
inline constexpr int kNumMelBands = 128;
inline constexpr double kLogMelFloor = 1e-10;
// Full-scale sinusoid power maps to this level before the phon stage.
inline constexpr double kFullScaleDb = 96.0;

// Row-major rows x cols matrix of features (rows = bands, cols = frames).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), values(r * c, fill) {}

  float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

struct PowerSpectrogram {
  Matrix bins;  // 513 x T, |X_k|^2 of the Hann-windowed frame
  int sample_rate = kTargetSampleRate;
  double fps = kFramesPerSecond;

  double bin_hz(std::size_t k) const { return static_cast<double>(k) * sample_rate / kFftSize; }
  std::size_t frames() const { return bins.cols; }
};

struct SpecificLoudness {
  Matrix sone;  // 22 x T
  std::array<double, kNumBarkBands + 1> band_edges_hz{};
};

struct LogMel {
  Matrix values;  // 128 x T
};

// Lower edge of band 0 followed by the 22 upper band edges (Zwicker table,
// truncated at 9.5 kHz).
const std::array<double, kNumBarkBands + 1>& zwicker_band_edges();

// Number of frames for n samples: ceil(n / 441).
std::size_t frame_count(std::size_t num_samples);

// Periodic Hann window of length 1024.
const std::vector<double>& hann_window();

// Frames are left-aligned: frame t covers samples [441 t, 441 t + 1024), the
// tail is zero-padded. Requires 22.05 kHz input of at least 1024 samples.
PowerSpectrogram stft_power(const Waveform& wav);

// Outer/middle-ear weight (power ratio) per FFT bin, Terhardt's formula; the DC bin is 0.
std::vector<double> terhardt_weights(int sample_rate);

// Schroeder spreading matrix S[i][j] (power ratio) from band j into band i.
std::vector<double> spreading_matrix();

double phon_to_sone(double phon);

SpecificLoudness bssl(const PowerSpectrogram& spec);

// Unnormalized triangular filters (peak 1) equally spaced on the HTK mel
// scale between 0 Hz and Nyquist; 128 x 513 row-major.
std::vector<double> mel_filterbank(int sample_rate);

LogMel log_mel(const PowerSpectrogram& spec);

// Per-frame max band + 0.15 * sum of the other bands.
std::vector<float> total_loudness(const SpecificLoudness& sl);

}  // namespace dynamark::audio
