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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamark/audio/feature_file.hpp"
#include "dynamark/objectives/losses.hpp"

namespace dynamark::dataset {

inline constexpr double kFps = 50.0;
inline constexpr std::size_t kBeatsPerBar = 3;

struct RecordingAnnotation {
  std::string piece_id;
  std::string performer_id;
  std::vector<double> beat_times;
  std::vector<std::uint8_t> downbeat_flags;
  std::vector<std::uint8_t> markings;  // per beat, carried forward; 0 = blank
  double duration = 0.0;
};

// beats CSV: beat_index,time_s,is_downbeat (is_downbeat may be left empty on
// every row, in which case downbeats follow 3/4 meter from beat 0).
// markings CSV: beat_index,marking, only for beats that carry a mark.
// Errors are SchemaError naming the file and 1-based line number.
RecordingAnnotation load_annotation(const std::filesystem::path& beats_csv, const std::filesystem::path& markings_csv,
                                    const std::string& piece_id = "", const std::string& performer_id = "");

// Same, from CSV text already in memory.
RecordingAnnotation parse_annotation(const std::string& beats_csv, const std::string& markings_csv,
                                     const std::string& beats_name = "beats", const std::string& markings_name = "markings");

// round(x * 50) with ties going up.
std::size_t time_to_frame(double seconds);

// Frame targets of length `frames`; throws SchemaError when two beats share a
// frame and InputError when a beat falls outside the frame range.
objectives::FrameTargets rasterize(const RecordingAnnotation& ann, std::size_t frames);

struct Segment {
  std::string recording_id;
  std::size_t start_frame = 0;
  audio::Matrix features;  // F x window, zero-padded past the recording end
  objectives::FrameTargets targets;

  double start_seconds() const { return static_cast<double>(start_frame) / kFps; }
};

enum class SegmentMode { kTrain, kEval };

struct SegmentConfig {
  double window_s = 60.0;
  double train_overlap = 0.5;
};

// Start frames only. Training keeps full windows stepping by
// window * (1 - overlap); a recording shorter than one window yields a single
// padded segment. With zero overlap, training tiles like evaluation.
// Evaluation tiles without overlap and pads the final window.
std::vector<std::size_t> segment_starts(std::size_t frames, SegmentMode mode, const SegmentConfig& cfg = {});

std::vector<Segment> segment(const std::string& recording_id, const audio::Matrix& features,
                             const objectives::FrameTargets& targets, SegmentMode mode, const SegmentConfig& cfg = {});

// Seeded Fisher-Yates shuffle of the sorted unique ids, then round-robin over k folds.
std::map<std::string, std::size_t> make_folds(const std::vector<std::string>& piece_ids, std::size_t k,
                                              std::uint64_t seed);

struct Recording {
  std::string id;
  RecordingAnnotation annotation;
  audio::FeatureFile features;
  objectives::FrameTargets targets;
};

struct CorpusEntry {
  std::string id;
  std::string piece;
  std::string performer;
  std::filesystem::path audio;     // optional
  std::filesystem::path features;  // DYNF file
  std::filesystem::path beats;
  std::filesystem::path markings;
};

// Manifest JSON: {"recordings": [{"id", "piece", "performer", "audio"?,
// "features", "beats", "markings"}]}; relative paths resolve against the
// manifest's directory.
std::vector<CorpusEntry> read_corpus_manifest(const std::filesystem::path& manifest);
void write_corpus_manifest(const std::filesystem::path& manifest, const std::vector<CorpusEntry>& entries);

// Loads features and annotations and rasterizes targets over the feature length.
std::vector<Recording> load_corpus(const std::vector<CorpusEntry>& entries);

// Segment manifest: recording ids, fold ids and segment offsets.
nlohmann::json segment_manifest(const std::vector<Recording>& recordings,
                                const std::map<std::string, std::size_t>& folds, const SegmentConfig& cfg);

}  // namespace dynamark::dataset
