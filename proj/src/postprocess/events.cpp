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

#include "dynamark/postprocess/events.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <sstream>

#include "dynamark/common/error.hpp"

namespace dynamark::postprocess {

namespace {

constexpr std::string_view kNames[kNumClasses] = {"blank", "pp", "p", "mf", "f", "ff"};

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

bool has_time(const std::vector<double>& sorted, double t) {
  return std::binary_search(sorted.begin(), sorted.end(), t);
}

}  // namespace

std::string_view marking_name(std::uint8_t cls) {
  if (cls >= kNumClasses) throw InputError("unknown marking class " + std::to_string(cls));
  return kNames[cls];
}

std::optional<std::uint8_t> parse_marking(std::string_view token) {
  if (token.empty()) return kBlank;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (token == kNames[c]) return static_cast<std::uint8_t>(c);
  }
  return std::nullopt;
}

std::vector<float> sigmoid(std::span<const float> logits) {
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    out[i] = static_cast<float>(x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)));
  }
  return out;
}

std::vector<std::size_t> pick_peaks(std::span<const float> probs, double threshold, std::size_t radius) {
  const std::size_t n = probs.size();
  std::vector<std::size_t> out;
  // Sliding-window maximum over [t - radius, t + radius] via a monotone deque.
  std::deque<std::size_t> window;
  std::size_t next = 0;
  bool kept_any = false;
  std::size_t last = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t hi = std::min(n - 1, t + radius);
    for (; next <= hi; ++next) {
      while (!window.empty() && probs[window.back()] <= probs[next]) window.pop_back();
      window.push_back(next);
    }
    while (window.front() + radius < t) window.pop_front();
    if (!(probs[t] > threshold) || probs[t] < probs[window.front()]) continue;
    if (kept_any && t - last <= radius) continue;
    out.push_back(t);
    last = t;
    kept_any = true;
  }
  return out;
}

std::vector<std::uint8_t> markings_at_beats(std::span<const float> dyn_probs, std::size_t frames,
                                            std::span<const std::size_t> beat_frames) {
  if (dyn_probs.size() != frames * kNumClasses) {
    throw ShapeError("markings_at_beats: expected " + std::to_string(frames * kNumClasses) + " probabilities, got " +
                     std::to_string(dyn_probs.size()));
  }
  std::vector<std::uint8_t> out;
  out.reserve(beat_frames.size());
  for (std::size_t f : beat_frames) {
    if (f >= frames) {
      throw InputError("markings_at_beats: beat frame " + std::to_string(f) + " outside [0, " +
                       std::to_string(frames) + ")");
    }
    const float* row = dyn_probs.data() + f * kNumClasses;
    out.push_back(static_cast<std::uint8_t>(std::max_element(row, row + kNumClasses) - row));
  }
  return out;
}

std::vector<std::size_t> change_points(std::span<const float> cp_probs, std::span<const std::size_t> beat_frames,
                                       double threshold) {
  std::vector<std::size_t> out;
  if (beat_frames.empty()) return out;
  for (std::size_t t = 0; t < cp_probs.size(); ++t) {
    if (!(cp_probs[t] > threshold)) continue;
    // First beat at or after t; compare with its predecessor.
    const auto it = std::lower_bound(beat_frames.begin(), beat_frames.end(), t);
    std::size_t idx;
    if (it == beat_frames.end()) {
      idx = beat_frames.size() - 1;
    } else if (it == beat_frames.begin()) {
      idx = 0;
    } else {
      const std::size_t after = static_cast<std::size_t>(it - beat_frames.begin());
      idx = (t - beat_frames[after - 1] <= *it - t) ? after - 1 : after;
    }
    out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> to_seconds(std::span<const std::size_t> frames, double fps) {
  std::vector<double> out;
  out.reserve(frames.size());
  for (std::size_t f : frames) out.push_back(to_seconds(f, fps));
  return out;
}

std::vector<std::size_t> snap_to_nearest(std::span<const double> times, std::span<const double> ref) {
  std::vector<std::size_t> out;
  if (ref.empty()) return out;
  out.reserve(times.size());
  for (double t : times) {
    const auto it = std::lower_bound(ref.begin(), ref.end(), t);
    if (it == ref.end()) {
      out.push_back(ref.size() - 1);
    } else if (it == ref.begin()) {
      out.push_back(0);
    } else {
      const std::size_t after = static_cast<std::size_t>(it - ref.begin());
      out.push_back(t - ref[after - 1] <= *it - t ? after - 1 : after);
    }
  }
  return out;
}

EventReport make_report(const FrameProbs& probs, const PostprocessConfig& cfg, std::span<const std::uint8_t> active,
                        const std::optional<std::vector<std::size_t>>& beat_frames_override) {
  const std::size_t frames = probs.frames();
  if (probs.downbeat.size() != frames || probs.change_point.size() != frames ||
      probs.dynamics.size() != frames * kNumClasses) {
    throw ShapeError("make_report: task probability lengths disagree");
  }
  if (!active.empty() && active.size() != frames) {
    throw ShapeError("make_report: expected activity mask of length " + std::to_string(frames) + ", got " +
                     std::to_string(active.size()));
  }
  auto keep_active = [&](std::vector<std::size_t> v) {
    if (active.empty()) return v;
    std::erase_if(v, [&](std::size_t f) { return active[f] == 0; });
    return v;
  };
  std::vector<std::size_t> beats;
  if (beat_frames_override) {
    beats = *beat_frames_override;
    std::erase_if(beats, [&](std::size_t f) { return f >= frames; });
  } else {
    beats = keep_active(pick_peaks(probs.beat, cfg.beat_threshold, cfg.radius));
  }
  std::vector<std::size_t> downbeats = keep_active(pick_peaks(probs.downbeat, cfg.beat_threshold, cfg.radius));
  if (cfg.align_downbeats) {
    std::vector<std::size_t> aligned;
    for (std::size_t d : downbeats) {
      const auto it = std::lower_bound(beats.begin(), beats.end(), d);
      std::optional<std::size_t> best;
      if (it != beats.end() && *it - d <= cfg.radius) best = *it;
      if (it != beats.begin() && d - *(it - 1) <= cfg.radius && (!best || d - *(it - 1) <= *best - d)) best = *(it - 1);
      if (best) aligned.push_back(*best);
    }
    aligned.erase(std::unique(aligned.begin(), aligned.end()), aligned.end());
    downbeats = std::move(aligned);
  }
  std::vector<float> cp = probs.change_point;
  if (!active.empty()) {
    for (std::size_t t = 0; t < frames; ++t) {
      if (!active[t]) cp[t] = 0.0f;
    }
  }
  EventReport report;
  report.beats = to_seconds(beats);
  report.downbeats = to_seconds(downbeats);
  report.markings = markings_at_beats(probs.dynamics, frames, beats);
  for (std::size_t idx : change_points(cp, beats, cfg.change_point_threshold)) {
    report.change_points.push_back(report.beats[idx]);
  }
  return report;
}

nlohmann::json to_json(const EventReport& report) {
  auto times = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double t : v) a.push_back(round3(t));
    return a;
  };
  nlohmann::json marks = nlohmann::json::array();
  for (auto m : report.markings) marks.push_back(std::string(marking_name(m)));
  return {{"beats", times(report.beats)},
          {"downbeats", times(report.downbeats)},
          {"change_points", times(report.change_points)},
          {"markings", marks}};
}

EventReport report_from_json(const nlohmann::json& j) {
  EventReport r;
  try {
    r.beats = j.at("beats").get<std::vector<double>>();
    r.downbeats = j.value("downbeats", std::vector<double>{});
    r.change_points = j.value("change_points", std::vector<double>{});
    const auto marks = j.value("markings", std::vector<std::string>{});
    for (std::size_t i = 0; i < marks.size(); ++i) {
      const auto m = parse_marking(marks[i]);
      if (!m) throw SchemaError("event report: unknown marking '" + marks[i] + "' at index " + std::to_string(i));
      r.markings.push_back(*m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("event report: ") + e.what());
  }
  if (!r.markings.empty() && r.markings.size() != r.beats.size()) {
    throw SchemaError("event report: " + std::to_string(r.markings.size()) + " markings for " +
                      std::to_string(r.beats.size()) + " beats");
  }
  if (!std::is_sorted(r.beats.begin(), r.beats.end())) throw SchemaError("event report: beats are not ascending");
  return r;
}

std::string to_csv(const EventReport& report) {
  std::ostringstream out;
  out << "time,marking,is_downbeat,is_change_point\n";
  std::vector<double> down = report.downbeats, cps = report.change_points;
  std::sort(down.begin(), down.end());
  std::sort(cps.begin(), cps.end());
  out << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < report.beats.size(); ++i) {
    const double t = report.beats[i];
    out << t << ',' << (i < report.markings.size() ? marking_name(report.markings[i]) : "blank") << ','
        << (has_time(down, t) ? 1 : 0) << ',' << (has_time(cps, t) ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace dynamark::postprocess
