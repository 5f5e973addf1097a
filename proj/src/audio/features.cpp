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

#include "dynamark/audio/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include "dynamark/common/error.hpp"

namespace dynamark::audio {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Schroeder et al. spreading function, dB, for a maskee dz Bark above the masker.
double schroeder_db(double dz) {
  const double x = dz + 0.474;
  return 15.81 + 7.5 * x - 17.5 * std::sqrt(1.0 + x * x);
}

void require_target_rate(const PowerSpectrogram& spec, const char* op) {
  if (spec.sample_rate != kTargetSampleRate) {
    throw ConfigError(std::string(op) + ": spectrogram must come from 22050 Hz audio, got " +
                      std::to_string(spec.sample_rate) + " Hz");
  }
  if (spec.bins.rows != static_cast<std::size_t>(kNumFftBins)) {
    throw ConfigError(std::string(op) + ": expected 513 frequency bins, got " + std::to_string(spec.bins.rows));
  }
}

}  // namespace

const std::array<double, kNumBarkBands + 1>& zwicker_band_edges() {
  static const std::array<double, kNumBarkBands + 1> edges = {
      0,    100,  200,  300,  400,  510,  630,  770,  920,  1080, 1270, 1480,
      1720, 2000, 2320, 2700, 3150, 3700, 4400, 5300, 6400, 7700, 9500};
  return edges;
}

std::size_t frame_count(std::size_t num_samples) {
  return (num_samples + kHopSize - 1) / kHopSize;
}

const std::vector<double>& hann_window() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFftSize);
    for (int n = 0; n < kFftSize; ++n) w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kFftSize);
    return w;
  }();
  return window;
}

PowerSpectrogram stft_power(const Waveform& wav) {
  if (wav.sample_rate != kTargetSampleRate) {
    throw ConfigError("stft_power: expected 22050 Hz input, got " + std::to_string(wav.sample_rate) + " Hz");
  }
  if (wav.samples.size() < static_cast<std::size_t>(kFftSize)) {
    throw EmptyInputError("stft_power: input too short, need at least 1024 samples, got " +
                          std::to_string(wav.samples.size()));
  }
  const std::size_t frames = frame_count(wav.samples.size());
  PowerSpectrogram spec;
  spec.bins = Matrix(kNumFftBins, frames);

  double* in = fftw_alloc_real(kFftSize);
  fftw_complex* out = fftw_alloc_complex(kNumFftBins);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);
  }
  const auto& window = hann_window();
  const std::size_t n = wav.samples.size();
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * kHopSize;
    for (int i = 0; i < kFftSize; ++i) {
      const std::size_t idx = start + static_cast<std::size_t>(i);
      in[i] = idx < n ? wav.samples[idx] * window[i] : 0.0;
    }
    fftw_execute(plan);
    for (int k = 0; k < kNumFftBins; ++k) {
      spec.bins.at(k, t) = static_cast<float>(out[k][0] * out[k][0] + out[k][1] * out[k][1]);
    }
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return spec;
}

std::vector<double> terhardt_weights(int sample_rate) {
  std::vector<double> w(kNumFftBins, 0.0);
  for (int k = 1; k < kNumFftBins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / kFftSize / 1000.0;  // kHz
    const double db = -3.64 * std::pow(f, -0.8) + 6.5 * std::exp(-0.6 * (f - 3.3) * (f - 3.3)) -
                      1e-3 * std::pow(f, 4.0);
    w[k] = std::pow(10.0, db / 10.0);
  }
  return w;
}

std::vector<double> spreading_matrix() {
  std::vector<double> s(kNumBarkBands * kNumBarkBands);
  for (int i = 0; i < kNumBarkBands; ++i) {
    for (int j = 0; j < kNumBarkBands; ++j) {
      s[i * kNumBarkBands + j] = std::pow(10.0, schroeder_db(static_cast<double>(i - j)) / 10.0);
    }
  }
  return s;
}

double phon_to_sone(double phon) {
  if (phon >= 40.0) return std::pow(2.0, (phon - 40.0) / 10.0);
  return std::pow(std::max(phon, 0.0) / 40.0, 2.642);
}

SpecificLoudness bssl(const PowerSpectrogram& spec) {
  require_target_rate(spec, "bssl");
  const std::size_t frames = spec.frames();
  const auto& edges = zwicker_band_edges();
  const auto weights = terhardt_weights(spec.sample_rate);
  const auto spread = spreading_matrix();

  // |X|^2 of a full-scale sinusoid on an exact bin is (A * sum(w) / 2)^2.
  double window_sum = 0.0;
  for (double v : hann_window()) window_sum += v;
  const double calibration = std::pow(2.0 / window_sum, 2) * std::pow(10.0, kFullScaleDb / 10.0);

  std::vector<int> band_of_bin(kNumFftBins, -1);
  for (int k = 0; k < kNumFftBins; ++k) {
    const double f = spec.bin_hz(k);
    for (int b = 0; b < kNumBarkBands; ++b) {
      if ((b == 0 && f <= edges[1]) || (f > edges[b] && f <= edges[b + 1])) {
        band_of_bin[k] = b;
        break;
      }
    }
  }

  SpecificLoudness out;
  out.band_edges_hz = edges;
  out.sone = Matrix(kNumBarkBands, frames);
  std::array<double, kNumBarkBands> band{}, spread_band{};
  for (std::size_t t = 0; t < frames; ++t) {
    band.fill(0.0);
    for (int k = 0; k < kNumFftBins; ++k) {
      if (band_of_bin[k] >= 0) band[band_of_bin[k]] += weights[k] * spec.bins.at(k, t) * calibration;
    }
    for (int i = 0; i < kNumBarkBands; ++i) {
      double acc = 0.0;
      for (int j = 0; j < kNumBarkBands; ++j) acc += spread[i * kNumBarkBands + j] * band[j];
      spread_band[i] = acc;
    }
    for (int i = 0; i < kNumBarkBands; ++i) {
      // The ear weighting already carries the equal-loudness correction, so
      // the weighted level in dB is taken as the loudness level in phon.
      const double db = 10.0 * std::log10(std::max(spread_band[i], 1.0));
      out.sone.at(i, t) = static_cast<float>(phon_to_sone(db));
    }
  }
  return out;
}

std::vector<double> mel_filterbank(int sample_rate) {
  auto hz_to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double nyquist = sample_rate / 2.0;
  const double top = hz_to_mel(nyquist);
  std::vector<double> points(kNumMelBands + 2);
  for (int i = 0; i < kNumMelBands + 2; ++i) points[i] = mel_to_hz(top * i / (kNumMelBands + 1));
  std::vector<double> bank(static_cast<std::size_t>(kNumMelBands) * kNumFftBins, 0.0);
  for (int m = 0; m < kNumMelBands; ++m) {
    const double lo = points[m], center = points[m + 1], hi = points[m + 2];
    for (int k = 0; k < kNumFftBins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / kFftSize;
      double w = 0.0;
      if (f > lo && f <= center) {
        w = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      bank[static_cast<std::size_t>(m) * kNumFftBins + k] = w;
    }
  }
  return bank;
}

LogMel log_mel(const PowerSpectrogram& spec) {
  require_target_rate(spec, "log_mel");
  const auto bank = mel_filterbank(spec.sample_rate);
  const std::size_t frames = spec.frames();
  LogMel out;
  out.values = Matrix(kNumMelBands, frames);
  std::vector<double> column(kNumFftBins);
  for (std::size_t t = 0; t < frames; ++t) {
    for (int k = 0; k < kNumFftBins; ++k) column[k] = spec.bins.at(k, t);
    for (int m = 0; m < kNumMelBands; ++m) {
      const double* w = bank.data() + static_cast<std::size_t>(m) * kNumFftBins;
      double acc = 0.0;
      for (int k = 0; k < kNumFftBins; ++k) acc += w[k] * column[k];
      out.values.at(m, t) = static_cast<float>(std::log(acc + kLogMelFloor));
    }
  }
  return out;
}

std::vector<float> total_loudness(const SpecificLoudness& sl) {
  const std::size_t frames = sl.sone.cols;
  std::vector<float> out(frames, 0.0f);
  for (std::size_t t = 0; t < frames; ++t) {
    double peak = 0.0, total = 0.0;
    for (std::size_t b = 0; b < sl.sone.rows; ++b) {
      const double v = sl.sone.at(b, t);
      peak = std::max(peak, v);
      total += v;
    }
    out[t] = static_cast<float>(peak + 0.15 * (total - peak));
  }
  return out;
}

}  // namespace dynamark::audio
