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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dynamark::postprocess {

inline constexpr double kFps = 50.0;

// Class ids shared with the dataset targets.
enum Marking : std::uint8_t { kBlank = 0, kPP = 1, kP = 2, kMF = 3, kF = 4, kFF = 5 };
inline constexpr std::size_t kNumClasses = 6;

std::string_view marking_name(std::uint8_t cls);
// Accepts pp, p, mf, f, ff and "blank"/""; returns nullopt for anything else.
std::optional<std::uint8_t> parse_marking(std::string_view token);

std::vector<float> sigmoid(std::span<const float> logits);

// Frames t with probs[t] > threshold and probs[t] >= probs[u] for every u
// within +-radius. Candidates are scanned in time order and a candidate is
// kept only if it lies more than `radius` frames after the last kept one, so
// the earliest frame of a plateau wins.
std::vector<std::size_t> pick_peaks(std::span<const float> probs, double threshold = 0.5, std::size_t radius = 3);

// Argmax class at each beat frame (lowest index on ties). dyn_probs is T x 6 row-major.
std::vector<std::uint8_t> markings_at_beats(std::span<const float> dyn_probs, std::size_t frames,
                                            std::span<const std::size_t> beat_frames);

// Indices into beat_frames of the beats nearest to frames with prob > threshold
// (earlier beat on ties), sorted and unique.
std::vector<std::size_t> change_points(std::span<const float> cp_probs, std::span<const std::size_t> beat_frames,
                                       double threshold = 0.75);

inline double to_seconds(std::size_t frame, double fps = kFps) { return static_cast<double>(frame) / fps; }
std::vector<double> to_seconds(std::span<const std::size_t> frames, double fps = kFps);

// Nearest reference index for each time (earlier on ties); empty ref gives empty output.
std::vector<std::size_t> snap_to_nearest(std::span<const double> times, std::span<const double> ref);

struct EventReport {
  std::vector<double> beats;
  std::vector<double> downbeats;
  std::vector<std::uint8_t> markings;  // one per beat
  std::vector<double> change_points;   // subset of beats
};

// Frame-wise probabilities for one recording.
struct FrameProbs {
  std::vector<float> dynamics;  // T x 6
  std::vector<float> change_point;
  std::vector<float> beat;
  std::vector<float> downbeat;
  std::size_t frames() const { return beat.size(); }
};

struct PostprocessConfig {
  double beat_threshold = 0.5;
  double change_point_threshold = 0.75;
  std::size_t radius = 3;
  // Drop downbeats with no detected beat within +-radius and move the rest onto that beat.
  bool align_downbeats = false;
};

// `active` (optional, per frame) marks frames that carry signal; events in
// inactive frames are discarded. `beat_frames_override` replaces the detected
// beats for marking readout and change-point snapping.
EventReport make_report(const FrameProbs& probs, const PostprocessConfig& cfg = {},
                        std::span<const std::uint8_t> active = {},
                        const std::optional<std::vector<std::size_t>>& beat_frames_override = std::nullopt);

// JSON: {"beats": [...], "downbeats": [...], "change_points": [...], "markings": [...]},
// times in seconds rounded to 3 decimals.
nlohmann::json to_json(const EventReport& report);
EventReport report_from_json(const nlohmann::json& j);
// One row per beat: time,marking,is_downbeat,is_change_point.
std::string to_csv(const EventReport& report);

}  // namespace dynamark::postprocess
