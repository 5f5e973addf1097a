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
#include <string>
#include <vector>

#include "dynamark/audio/feature_file.hpp"
#include "dynamark/audio/wav.hpp"
#include "dynamark/dataset/corpus.hpp"

namespace dynamark::synth {

// Metronomic click-plus-tone clips in 3/4 with piecewise constant dynamics.
// Each section spans whole bars and sits at a fixed level below full scale;
// every clip contains at least one ff section so peak normalization keeps the
// levels comparable across clips.
struct SynthConfig {
  double duration_s = 60.0;
  double bpm = 100.0;
  double first_beat_s = 0.5;
  std::size_t min_section_bars = 2;
  std::size_t max_section_bars = 5;
  int sample_rate = audio::kTargetSampleRate;
};

// Level in dB relative to full scale for markings pp..ff (index = marking).
double level_db(std::uint8_t marking);

struct SynthClip {
  std::string id;
  audio::Waveform audio;
  dataset::RecordingAnnotation annotation;
  std::vector<std::size_t> section_starts;  // beat indices where a marking is written
};

SynthClip synth_clip(const std::string& id, const SynthConfig& cfg, std::uint64_t seed);

// In-memory recording with extracted features and rasterized targets.
dataset::Recording to_recording(const SynthClip& clip, const std::string& piece_id,
                                audio::FeatureKind feature = audio::FeatureKind::kBssl);

std::string beats_csv(const dataset::RecordingAnnotation& ann);
// One row per section start.
std::string markings_csv(const SynthClip& clip);

struct CorpusOptions {
  std::size_t clips = 4;
  std::uint64_t seed = 86;
  SynthConfig clip;
  bool write_features = true;
  audio::FeatureKind feature = audio::FeatureKind::kBssl;
};

// Writes <id>.wav, <id>.beats.csv, <id>.markings.csv, optionally
// <id>.<feature>.dynf, and corpus.json into `dir`. Clip i uses piece id
// "piece<i>". Returns the manifest entries.
std::vector<dataset::CorpusEntry> write_corpus(const std::filesystem::path& dir, const CorpusOptions& opts);

}  // namespace dynamark::synth
