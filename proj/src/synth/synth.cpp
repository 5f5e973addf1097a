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

#include "dynamark/synth/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "dynamark/common/error.hpp"
#include "dynamark/common/io.hpp"
#include "dynamark/common/random.hpp"
#include "dynamark/postprocess/events.hpp"

namespace dynamark::synth {

namespace {

constexpr double kToneHz = 440.0;
constexpr double kDownbeatToneHz = 660.0;
constexpr double kToneDecayS = 0.12;
constexpr double kToneLengthS = 0.45;
constexpr double kClickDecayS = 0.004;
constexpr double kClickLengthS = 0.02;
constexpr double kDroneHz = 220.0;
constexpr double kDroneDb = -12.0;  // relative to the section level

}  // namespace

double level_db(std::uint8_t marking) {
  switch (marking) {
    case postprocess::kPP: return -32.0;
    case postprocess::kP: return -24.0;
    case postprocess::kMF: return -16.0;
    case postprocess::kF: return -8.0;
    case postprocess::kFF: return 0.0;
    default: throw ConfigError("level_db: marking " + std::to_string(marking) + " has no level");
  }
}

SynthClip synth_clip(const std::string& id, const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.bpm <= 0.0 || cfg.duration_s <= cfg.first_beat_s) throw ConfigError("synth: bad tempo or duration");
  if (cfg.min_section_bars == 0 || cfg.max_section_bars < cfg.min_section_bars) {
    throw ConfigError("synth: section bar range is empty");
  }
  std::mt19937_64 rng(seed);
  SynthClip clip;
  clip.id = id;
  auto& ann = clip.annotation;
  const double period = 60.0 / cfg.bpm;
  // Keep the last tone inside the clip.
  for (double t = cfg.first_beat_s; t + kToneLengthS <= cfg.duration_s; t += period) {
    ann.beat_times.push_back(std::round(t * 1000.0) / 1000.0);
  }
  const std::size_t n = ann.beat_times.size();
  for (std::size_t i = 0; i < n; ++i) ann.downbeat_flags.push_back(i % dataset::kBeatsPerBar == 0);

  std::uint8_t prev = postprocess::kBlank;
  bool has_ff = false;
  for (std::size_t start = 0; start < n;) {
    const std::size_t bars =
        cfg.min_section_bars + rng::uniform_index(rng, cfg.max_section_bars - cfg.min_section_bars + 1);
    std::uint8_t level;
    do {
      level = static_cast<std::uint8_t>(postprocess::kPP + rng::uniform_index(rng, 5));
    } while (level == prev);
    clip.section_starts.push_back(start);
    const std::size_t end = std::min(n, start + bars * dataset::kBeatsPerBar);
    for (std::size_t i = start; i < end; ++i) ann.markings.push_back(level);
    has_ff |= level == postprocess::kFF;
    prev = level;
    start = end;
  }
  if (!has_ff) {
    // Promote the loudest section so the clip reaches full scale.
    std::uint8_t loudest = *std::max_element(ann.markings.begin(), ann.markings.end());
    for (auto& m : ann.markings) {
      if (m == loudest) m = postprocess::kFF;
    }
  }
  ann.duration = ann.beat_times.empty() ? 0.0 : ann.beat_times.back();

  const int sr = cfg.sample_rate;
  auto& y = clip.audio.samples;
  clip.audio.sample_rate = sr;
  y.assign(static_cast<std::size_t>(std::llround(cfg.duration_s * sr)), 0.0f);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double gain = std::pow(10.0, level_db(ann.markings[i]) / 20.0);
    const double hz = ann.downbeat_flags[i] ? kDownbeatToneHz : kToneHz;
    const auto s0 = static_cast<std::size_t>(std::llround(ann.beat_times[i] * sr));
    const std::size_t beat_end = i + 1 < n ? static_cast<std::size_t>(std::llround(ann.beat_times[i + 1] * sr)) : y.size();
    const auto tone_len = static_cast<std::size_t>(kToneLengthS * sr);
    const auto click_len = static_cast<std::size_t>(kClickLengthS * sr);
    for (std::size_t k = 0; k < tone_len && s0 + k < y.size(); ++k) {
      const double t = static_cast<double>(k) / sr;
      double v = 0.5 * std::exp(-t / kToneDecayS) * std::sin(two_pi * hz * t);
      if (k < click_len) v += 0.4 * std::exp(-t / kClickDecayS) * noise(rng);
      y[s0 + k] += static_cast<float>(gain * v);
    }
    const double drone = 0.5 * gain * std::pow(10.0, kDroneDb / 20.0);
    for (std::size_t k = s0; k < beat_end && k < y.size(); ++k) {
      y[k] += static_cast<float>(drone * std::sin(two_pi * kDroneHz * static_cast<double>(k) / sr));
    }
  }
  audio::peak_normalize(clip.audio);
  return clip;
}

dataset::Recording to_recording(const SynthClip& clip, const std::string& piece_id, audio::FeatureKind feature) {
  dataset::Recording r;
  r.id = clip.id;
  r.annotation = clip.annotation;
  r.annotation.piece_id = piece_id;
  r.annotation.performer_id = "synth";
  r.features = audio::extract_features(clip.audio, feature);
  r.targets = dataset::rasterize(r.annotation, r.features.values.cols);
  return r;
}

std::string beats_csv(const dataset::RecordingAnnotation& ann) {
  std::string out = "beat_index,time_s,is_downbeat\n";
  char buf[64];
  for (std::size_t i = 0; i < ann.beat_times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.3f,%d\n", i, ann.beat_times[i], ann.downbeat_flags[i] ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string markings_csv(const SynthClip& clip) {
  std::string out = "beat_index,marking\n";
  for (auto i : clip.section_starts) {
    out += std::to_string(i) + "," + std::string(postprocess::marking_name(clip.annotation.markings[i])) + "\n";
  }
  return out;
}

std::vector<dataset::CorpusEntry> write_corpus(const std::filesystem::path& dir, const CorpusOptions& opts) {
  std::filesystem::create_directories(dir);
  std::vector<dataset::CorpusEntry> entries;
  for (std::size_t i = 0; i < opts.clips; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth%03zu", i);
    const auto clip = synth_clip(id, opts.clip, opts.seed + 1000003ULL * i);
    dataset::CorpusEntry e;
    e.id = id;
    e.piece = "piece" + std::to_string(i);
    e.performer = "synth";
    e.audio = dir / (e.id + ".wav");
    e.beats = dir / (e.id + ".beats.csv");
    e.markings = dir / (e.id + ".markings.csv");
    e.features = dir / (e.id + "." + std::string(audio::feature_kind_name(opts.feature)) + ".dynf");
    audio::write_wav(e.audio, clip.audio.samples, 1, clip.audio.sample_rate, audio::SampleFormat::kFloat32);
    io::write_text_atomic(e.beats, beats_csv(clip.annotation));
    io::write_text_atomic(e.markings, markings_csv(clip));
    if (opts.write_features) {
      audio::write_features(e.features, audio::extract_features(audio::decode_and_prepare(e.audio), opts.feature));
    }
    entries.push_back(std::move(e));
  }
  dataset::write_corpus_manifest(dir / "corpus.json", entries);
  return entries;
}

}  // namespace dynamark::synth
