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

#include "dynamark/dataset/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dynamark/common/error.hpp"
#include "dynamark/common/io.hpp"
#include "dynamark/common/random.hpp"
#include "dynamark/postprocess/events.hpp"

namespace dynamark::dataset {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(const std::string& text, const std::string& name, const std::string& header,
                              std::size_t columns) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                                : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!seen_header) {
      std::string joined;
      for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
      if (joined != header) {
        throw SchemaError(name + " line " + std::to_string(line_no) + ": expected header '" + header + "', got '" +
                          joined + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != columns) {
      throw SchemaError(name + " line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                        " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back({line_no, std::move(fields)});
  }
  if (!seen_header) throw SchemaError(name + ": missing header '" + header + "'");
  return rows;
}

template <typename T>
T parse_number(const std::string& s, const std::string& name, std::size_t line, const char* what) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw SchemaError(name + " line " + std::to_string(line) + ": invalid " + what + " '" + s + "'");
  }
  return value;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RecordingAnnotation parse_annotation(const std::string& beats_csv, const std::string& markings_csv,
                                     const std::string& beats_name, const std::string& markings_name) {
  RecordingAnnotation ann;
  const auto beat_rows = parse_csv(beats_csv, beats_name, "beat_index,time_s,is_downbeat", 3);
  bool any_flag = false, any_blank_flag = false;
  std::vector<std::optional<std::uint8_t>> flags;
  for (std::size_t i = 0; i < beat_rows.size(); ++i) {
    const auto& row = beat_rows[i];
    const auto idx = parse_number<std::size_t>(row.fields[0], beats_name, row.line, "beat_index");
    if (idx != i) {
      throw SchemaError(beats_name + " line " + std::to_string(row.line) + ": expected beat_index " +
                        std::to_string(i) + ", got " + std::to_string(idx));
    }
    const double t = parse_number<double>(row.fields[1], beats_name, row.line, "time_s");
    if (!std::isfinite(t) || t < 0.0) {
      throw SchemaError(beats_name + " line " + std::to_string(row.line) + ": time must be finite and >= 0");
    }
    if (!ann.beat_times.empty() && t <= ann.beat_times.back()) {
      throw SchemaError(beats_name + " line " + std::to_string(row.line) + ": beat times must be strictly ascending");
    }
    ann.beat_times.push_back(t);
    const std::string& f = row.fields[2];
    if (f.empty()) {
      any_blank_flag = true;
      flags.push_back(std::nullopt);
    } else if (f == "0" || f == "1") {
      any_flag = true;
      flags.push_back(static_cast<std::uint8_t>(f == "1"));
    } else {
      throw SchemaError(beats_name + " line " + std::to_string(row.line) + ": is_downbeat must be 0, 1 or empty, got '" +
                        f + "'");
    }
  }
  if (any_flag && any_blank_flag) {
    throw SchemaError(beats_name + ": is_downbeat must be given on every row or on none");
  }
  for (std::size_t i = 0; i < flags.size(); ++i) {
    ann.downbeat_flags.push_back(flags[i] ? *flags[i] : static_cast<std::uint8_t>(i % kBeatsPerBar == 0));
  }

  std::vector<std::uint8_t> explicit_marks(ann.beat_times.size(), 0);
  std::vector<bool> marked(ann.beat_times.size(), false);
  for (const auto& row : parse_csv(markings_csv, markings_name, "beat_index,marking", 2)) {
    const auto idx = parse_number<std::size_t>(row.fields[0], markings_name, row.line, "beat_index");
    if (idx >= ann.beat_times.size()) {
      throw SchemaError(markings_name + " line " + std::to_string(row.line) + ": beat_index " + std::to_string(idx) +
                        " exceeds the " + std::to_string(ann.beat_times.size()) + " annotated beats");
    }
    const auto m = postprocess::parse_marking(row.fields[1]);
    if (!m || *m == postprocess::kBlank) {
      throw SchemaError(markings_name + " line " + std::to_string(row.line) + ": unknown marking token '" +
                        row.fields[1] + "'");
    }
    if (marked[idx]) {
      throw SchemaError(markings_name + " line " + std::to_string(row.line) + ": beat " + std::to_string(idx) +
                        " is marked twice");
    }
    marked[idx] = true;
    explicit_marks[idx] = *m;
  }
  std::uint8_t current = postprocess::kBlank;
  for (std::size_t i = 0; i < ann.beat_times.size(); ++i) {
    if (marked[i]) current = explicit_marks[i];
    ann.markings.push_back(current);
  }
  ann.duration = ann.beat_times.empty() ? 0.0 : ann.beat_times.back();
  return ann;
}

RecordingAnnotation load_annotation(const std::filesystem::path& beats_csv, const std::filesystem::path& markings_csv,
                                    const std::string& piece_id, const std::string& performer_id) {
  auto ann = parse_annotation(read_text(beats_csv), read_text(markings_csv), beats_csv.string(), markings_csv.string());
  ann.piece_id = piece_id;
  ann.performer_id = performer_id;
  return ann;
}

std::size_t time_to_frame(double seconds) {
  return static_cast<std::size_t>(std::floor(seconds * kFps + 0.5));
}

objectives::FrameTargets rasterize(const RecordingAnnotation& ann, std::size_t frames) {
  auto t = objectives::FrameTargets::empty(frames);
  std::vector<std::size_t> beat_frames;
  for (std::size_t i = 0; i < ann.beat_times.size(); ++i) {
    const std::size_t f = time_to_frame(ann.beat_times[i]);
    if (f >= frames) {
      throw InputError("rasterize: beat " + std::to_string(i) + " at " + std::to_string(ann.beat_times[i]) +
                       " s falls outside the " + std::to_string(frames) + " frames");
    }
    if (!beat_frames.empty() && f == beat_frames.back()) {
      throw SchemaError("rasterize: beats " + std::to_string(i - 1) + " and " + std::to_string(i) +
                        " both round to frame " + std::to_string(f));
    }
    beat_frames.push_back(f);
    t.beat[f] = 1;
    t.beat_mask[f] = 1;
    t.downbeat[f] = ann.downbeat_flags[i];
    const std::uint8_t prev = i == 0 ? std::uint8_t{postprocess::kBlank} : ann.markings[i - 1];
    t.change_point[f] = static_cast<std::uint8_t>(ann.markings[i] != prev);
  }
  std::uint8_t current = postprocess::kBlank;
  std::size_t next = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    if (next < beat_frames.size() && beat_frames[next] == f) current = ann.markings[next++];
    t.dynamic_class[f] = current;
  }
  return t;
}

std::vector<std::size_t> segment_starts(std::size_t frames, SegmentMode mode, const SegmentConfig& cfg) {
  const auto window = static_cast<std::size_t>(std::llround(cfg.window_s * kFps));
  if (window == 0) throw ConfigError("segment: window must be at least one frame");
  if (cfg.train_overlap < 0.0 || cfg.train_overlap >= 1.0) throw ConfigError("segment: overlap must be in [0, 1)");
  std::vector<std::size_t> starts;
  if (frames == 0) return starts;
  const bool tile = mode == SegmentMode::kEval || cfg.train_overlap == 0.0;
  if (tile) {
    for (std::size_t s = 0; s < frames; s += window) starts.push_back(s);
    return starts;
  }
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(window * (1.0 - cfg.train_overlap))));
  if (frames < window) return {0};
  for (std::size_t s = 0; s + window <= frames; s += hop) starts.push_back(s);
  return starts;
}

std::vector<Segment> segment(const std::string& recording_id, const audio::Matrix& features,
                             const objectives::FrameTargets& targets, SegmentMode mode, const SegmentConfig& cfg) {
  const std::size_t frames = features.cols;
  if (targets.frames() != frames) {
    throw ShapeError("segment: features have " + std::to_string(frames) + " frames, targets " +
                     std::to_string(targets.frames()));
  }
  const auto window = static_cast<std::size_t>(std::llround(cfg.window_s * kFps));
  std::vector<Segment> out;
  for (std::size_t start : segment_starts(frames, mode, cfg)) {
    Segment s;
    s.recording_id = recording_id;
    s.start_frame = start;
    s.features = audio::Matrix(features.rows, window);
    s.targets = objectives::FrameTargets::empty(window);
    const std::size_t n = std::min(window, frames - start);
    for (std::size_t r = 0; r < features.rows; ++r) {
      std::copy_n(features.values.begin() + static_cast<std::ptrdiff_t>(r * frames + start), n,
                  s.features.values.begin() + static_cast<std::ptrdiff_t>(r * window));
    }
    auto copy = [&](const std::vector<std::uint8_t>& src, std::vector<std::uint8_t>& dst) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(start), n, dst.begin());
    };
    copy(targets.beat, s.targets.beat);
    copy(targets.downbeat, s.targets.downbeat);
    copy(targets.change_point, s.targets.change_point);
    copy(targets.dynamic_class, s.targets.dynamic_class);
    copy(targets.beat_mask, s.targets.beat_mask);
    std::fill(s.targets.valid.begin() + static_cast<std::ptrdiff_t>(n), s.targets.valid.end(), 0);
    out.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, std::size_t> make_folds(const std::vector<std::string>& piece_ids, std::size_t k,
                                              std::uint64_t seed) {
  std::vector<std::string> ids(piece_ids.begin(), piece_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (k == 0 || k > ids.size()) {
    throw ConfigError("make_folds: k = " + std::to_string(k) + " needs between 1 and " + std::to_string(ids.size()) +
                      " folds");
  }
  std::mt19937_64 engine(seed);
  rng::shuffle(ids, engine);
  std::map<std::string, std::size_t> folds;
  for (std::size_t i = 0; i < ids.size(); ++i) folds[ids[i]] = i % k;
  return folds;
}

std::vector<CorpusEntry> read_corpus_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw InputError("cannot open corpus manifest " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("corpus manifest " + manifest.string() + ": " + e.what());
  }
  const auto base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  std::vector<CorpusEntry> out;
  try {
    const auto& recs = j.at("recordings");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      CorpusEntry e;
      e.id = r.at("id").get<std::string>();
      e.piece = r.at("piece").get<std::string>();
      e.performer = r.value("performer", std::string());
      if (r.contains("audio")) e.audio = resolve(r["audio"].get<std::string>());
      e.features = resolve(r.at("features").get<std::string>());
      e.beats = resolve(r.at("beats").get<std::string>());
      e.markings = resolve(r.at("markings").get<std::string>());
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("corpus manifest " + manifest.string() + ": " + e.what());
  }
  std::set<std::string> seen;
  for (const auto& e : out) {
    if (!seen.insert(e.id).second) throw SchemaError("corpus manifest: duplicate recording id '" + e.id + "'");
  }
  return out;
}

void write_corpus_manifest(const std::filesystem::path& manifest, const std::vector<CorpusEntry>& entries) {
  const auto base = manifest.parent_path();
  auto rel = [&](const std::filesystem::path& p) { return std::filesystem::relative(p, base).generic_string(); };
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json r{{"id", e.id},
                     {"piece", e.piece},
                     {"performer", e.performer},
                     {"features", rel(e.features)},
                     {"beats", rel(e.beats)},
                     {"markings", rel(e.markings)}};
    if (!e.audio.empty()) r["audio"] = rel(e.audio);
    recs.push_back(std::move(r));
  }
  io::write_text_atomic(manifest, nlohmann::json{{"recordings", recs}}.dump(2) + "\n");
}

std::vector<Recording> load_corpus(const std::vector<CorpusEntry>& entries) {
  std::vector<Recording> out;
  for (const auto& e : entries) {
    if (!std::filesystem::exists(e.features)) {
      throw InputError("missing feature file " + e.features.string() + " for recording '" + e.id +
                       "'; run `dynamark extract` on the audio first");
    }
    Recording r;
    r.id = e.id;
    r.features = audio::read_features(e.features);
    r.annotation = load_annotation(e.beats, e.markings, e.piece, e.performer);
    r.annotation.duration = static_cast<double>(r.features.values.cols) / kFps;
    r.targets = rasterize(r.annotation, r.features.values.cols);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json segment_manifest(const std::vector<Recording>& recordings,
                                const std::map<std::string, std::size_t>& folds, const SegmentConfig& cfg) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : recordings) {
    auto offsets = [&](SegmentMode mode) {
      nlohmann::json a = nlohmann::json::array();
      for (auto s : segment_starts(r.features.values.cols, mode, cfg)) a.push_back(static_cast<double>(s) / kFps);
      return a;
    };
    const auto it = folds.find(r.annotation.piece_id);
    recs.push_back({{"id", r.id},
                    {"piece", r.annotation.piece_id},
                    {"fold", it == folds.end() ? nlohmann::json() : nlohmann::json(it->second)},
                    {"train_offsets_s", offsets(SegmentMode::kTrain)},
                    {"eval_offsets_s", offsets(SegmentMode::kEval)}});
  }
  return {{"window_s", cfg.window_s}, {"train_overlap", cfg.train_overlap}, {"recordings", recs}};
}

}  // namespace dynamark::dataset
