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
#include <span>
#include <vector>

namespace dynamark::audio {

// Mono signal, samples nominally in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Decoded file contents before any processing. Samples are interleaved.
struct PcmAudio {
  std::vector<float> interleaved;
  int channels = 0;
  int sample_rate = 0;

  std::size_t frames() const {
    return channels > 0 ? interleaved.size() / static_cast<std::size_t>(channels) : 0;
  }
};

enum class SampleFormat { kInt16, kInt24, kFloat32 };

// Reads RIFF/WAVE PCM (8/16/24/32-bit integer, 32/64-bit float, including
// WAVE_FORMAT_EXTENSIBLE). Throws DecodeError on malformed input.
PcmAudio read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, std::span<const float> interleaved, int channels,
               int sample_rate, SampleFormat format = SampleFormat::kFloat32);

inline constexpr int kTargetSampleRate = 22050;
inline constexpr double kTargetPeak = 0.89125093813374556;  // 10^(-1/20)

// Channel mean.
Waveform downmix(const PcmAudio& audio);

// Scales so that max |x| == kTargetPeak; all-zero input is returned unchanged.
void peak_normalize(Waveform& wav);

// Downmix, peak-normalize, resample to 22.05 kHz. Throws EmptyInputError for
// zero-length audio.
Waveform prepare(const PcmAudio& audio);

Waveform decode_and_prepare(const std::filesystem::path& path);

}  // namespace dynamark::audio
