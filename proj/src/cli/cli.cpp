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

#include "dynamark/cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynamark/audio/feature_file.hpp"
#include "dynamark/audio/features.hpp"
#include "dynamark/audio/wav.hpp"
#include "dynamark/common/error.hpp"
#include "dynamark/common/io.hpp"
#include "dynamark/dataset/corpus.hpp"
#include "dynamark/synth/synth.hpp"
#include "dynamark/trainer/train.hpp"

namespace dynamark::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() {
#ifdef DYNAMARK_VERSION
  return DYNAMARK_VERSION;
#else
  return "unknown";
#endif
}

namespace {

// Frames whose STFT power sum is below this count as silence (about -80 dB
// relative to a full-scale sine).
constexpr double kSilencePower = 5e-4;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::string started = utc_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  json config = json::object();
  json inputs = json::array();
  json outputs = json::array();
  std::optional<std::uint64_t> seed;

  void write(const fs::path& dir) const {
    fs::create_directories(dir);
    json j{{"command", command},
           {"argv", argv},
           {"config", config},
           {"inputs", inputs},
           {"outputs", outputs},
           {"seed", seed ? json(*seed) : json()},
           {"tool_version", version()},
           {"started_at", started},
           {"wall_clock_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    io::write_text_atomic(dir / "run_manifest.json", j.dump(2) + "\n");
  }
};

void write_output(const std::string& path, const std::string& text) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  io::write_text_atomic(path, text);
}

fs::path manifest_dir_for(const std::string& out_file) {
  if (out_file.empty()) return fs::current_path();
  const auto parent = fs::path(out_file).parent_path();
  return parent.empty() ? fs::current_path() : parent;
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string audio_dir;
  std::string out_dir;
  std::string feature = "bssl";
  bool force = false;
  unsigned jobs = 0;
  bool json_out = false;
};

int cmd_extract(const ExtractArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  const auto kind = audio::parse_feature_kind(a.feature);
  if (!fs::is_directory(a.audio_dir)) throw InputError("audio directory '" + a.audio_dir + "' does not exist");
  std::vector<fs::path> wavs;
  for (const auto& e : fs::directory_iterator(a.audio_dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".wav") wavs.push_back(e.path());
  }
  std::sort(wavs.begin(), wavs.end());
  fs::create_directories(a.out_dir);
  run.config = {{"feature", a.feature}, {"force", a.force}};
  if (wavs.empty()) err << "warning: no .wav files in " << a.audio_dir << "\n";

  enum class Status { kWritten, kSkipped, kFailed };
  std::vector<Status> status(wavs.size());
  std::vector<std::string> messages(wavs.size());
  std::vector<fs::path> outputs(wavs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < wavs.size(); i = next++) {
      outputs[i] = fs::path(a.out_dir) / (wavs[i].stem().string() + "." + std::string(audio::feature_kind_name(kind)) + ".dynf");
      if (!a.force && fs::exists(outputs[i])) {
        status[i] = Status::kSkipped;
        continue;
      }
      try {
        audio::write_features(outputs[i], audio::extract_features(audio::decode_and_prepare(wavs[i]), kind));
        status[i] = Status::kWritten;
      } catch (const std::exception& e) {
        status[i] = Status::kFailed;
        messages[i] = e.what();
        std::lock_guard lock(log_mutex);
        err << "error: " << wavs[i].string() << ": " << e.what() << "\n";
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned jobs = static_cast<unsigned>(std::min<std::size_t>(a.jobs ? a.jobs : hw, std::max<std::size_t>(1, wavs.size())));
  std::vector<std::thread> threads;
  for (unsigned j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  json written = json::array(), skipped = json::array(), failed = json::array();
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    run.inputs.push_back(wavs[i].string());
    if (status[i] == Status::kWritten) {
      written.push_back(outputs[i].string());
      run.outputs.push_back(outputs[i].string());
    } else if (status[i] == Status::kSkipped) {
      skipped.push_back(outputs[i].string());
    } else {
      failed.push_back({{"path", wavs[i].string()}, {"error", messages[i]}});
    }
  }
  run.write(a.out_dir);
  const json summary{{"written", written}, {"skipped", skipped}, {"failed", failed}};
  if (a.json_out) {
    out << summary.dump(2) << "\n";
  } else {
    err << "extract: " << written.size() << " written, " << skipped.size() << " skipped (exists, use --force), "
        << failed.size() << " failed\n";
  }
  return failed.empty() ? kExitOk : kExitInputError;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest;
  std::string config;
  std::string out_dir;
  std::optional<std::size_t> fold;
  bool all_folds = false;
  bool fit_all = false;
  std::string ablation;
  std::optional<std::size_t> epochs, batch_size, folds;
  std::optional<double> lr, segment_s;
  std::optional<std::uint64_t> seed;
  std::string tasks;
  bool quiet = false;
  bool json_out = false;
};

void resolve_train_config(const TrainArgs& a, model::ModelConfig& m, trainer::TrainConfig& t) {
  if (!a.config.empty()) trainer::apply_key_values(trainer::parse_key_values(read_text(a.config), a.config), m, t);
  if (const char* env = std::getenv("DYNAMARK_SEED"); env != nullptr && *env != '\0') {
    trainer::apply_key_values({{"seed", env}}, m, t);
  }
  std::map<std::string, std::string> flags;
  if (a.epochs) flags["epochs"] = std::to_string(*a.epochs);
  if (a.batch_size) flags["batch_size"] = std::to_string(*a.batch_size);
  if (a.folds) flags["folds"] = std::to_string(*a.folds);
  if (a.seed) flags["seed"] = std::to_string(*a.seed);
  trainer::apply_key_values(flags, m, t);
  if (a.lr) t.lr = *a.lr;
  if (a.segment_s) t.segment_s = *a.segment_s;
  if (!a.tasks.empty()) trainer::apply_key_values({{"enabled_tasks", a.tasks}}, m, t);
  trainer::apply_ablation(trainer::parse_ablation(a.ablation), m, t);
  m.validate();
  t.validate();
}

int cmd_train(const TrainArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  model::ModelConfig m;
  trainer::TrainConfig t;
  resolve_train_config(a, m, t);
  const std::string ablation = trainer::ablation_name(trainer::parse_ablation(a.ablation));
  json train_json = t;
  run.config = {{"model", m}, {"train", train_json}, {"ablation", ablation}};
  run.seed = t.seed;
  run.inputs.push_back(a.manifest);
  if (!a.config.empty()) run.inputs.push_back(a.config);

  const auto entries = dataset::read_corpus_manifest(a.manifest);
  if (entries.empty()) throw EmptyInputError("corpus manifest '" + a.manifest + "' lists no recordings");
  const auto recordings = dataset::load_corpus(entries);
  for (const auto& r : recordings) {
    if (r.features.values.rows != m.input_bins) {
      throw ConfigError("recording " + r.id + " has " + std::to_string(r.features.values.rows) +
                        "-bin features but the model expects " + std::to_string(m.input_bins) +
                        "; re-run `dynamark extract` with the matching --feature or set input_bins");
    }
  }
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);

  auto hooks_for = [&](const std::string& label) {
    trainer::TrainHooks h;
    if (!a.quiet) {
      h.on_epoch = [&err, label, epochs = t.epochs](const trainer::EpochLog& l) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "[%s] epoch %zu/%zu loss %.4f val avg %.3f (beat %.3f dbt %.3f cpt %.3f) %.1fs\n",
                      label.c_str(), l.epoch, epochs, l.mean_loss, l.validation.average(), l.validation.beat,
                      l.validation.downbeat, l.validation.change_point, l.seconds);
        err << buf << std::flush;
      };
    }
    return h;
  };

  json result;
  if (a.fit_all) {
    std::vector<const dataset::Recording*> all;
    for (const auto& r : recordings) all.push_back(&r);
    auto res = trainer::train_model(all, all, m, t, hooks_for("fit-all"));
    res.best.meta["ablation"] = ablation;
    auto net = trainer::instantiate(res.best);
    const auto ev = trainer::evaluate(net, all, t.segment_s);
    json recs = json::array();
    for (const auto& r : ev.recordings) recs.push_back(trainer::to_json(r));
    result = {{"mode", "fit_all"},
              {"ablation", ablation},
              {"model", m},
              {"train", train_json},
              {"best_epoch", res.best_epoch},
              {"training_set", trainer::to_json(ev.mean)},
              {"recordings", recs}};
    trainer::save_checkpoint(res.best, out_dir / "checkpoint.dync");
    io::write_text_atomic(out_dir / "report.json", result.dump(2) + "\n");
    run.outputs.push_back((out_dir / "checkpoint.dync").string());
    run.outputs.push_back((out_dir / "report.json").string());
  } else {
    std::vector<std::string> pieces;
    for (const auto& r : recordings) pieces.push_back(r.annotation.piece_id);
    const auto folds = dataset::make_folds(pieces, t.folds, t.seed);
    std::vector<std::size_t> which;
    if (a.fold) {
      if (*a.fold >= t.folds) throw ConfigError("--fold " + std::to_string(*a.fold) + " is out of range for " + std::to_string(t.folds) + " folds");
      which.push_back(*a.fold);
    } else {
      for (std::size_t f = 0; f < t.folds; ++f) which.push_back(f);
    }
    std::vector<trainer::FoldReport> reports;
    for (auto f : which) {
      auto rep = trainer::train_fold(recordings, folds, f, m, t, hooks_for("fold " + std::to_string(f)));
      rep.checkpoint.meta["ablation"] = ablation;
      const auto dir = out_dir / ("fold" + std::to_string(f));
      fs::create_directories(dir);
      auto fold_json = trainer::cross_validation_report({rep}, m, t);
      fold_json["ablation"] = ablation;
      trainer::save_checkpoint(rep.checkpoint, dir / "checkpoint.dync");
      io::write_text_atomic(dir / "report.json", fold_json.dump(2) + "\n");
      run.outputs.push_back((dir / "checkpoint.dync").string());
      run.outputs.push_back((dir / "report.json").string());
      reports.push_back(std::move(rep));
    }
    result = trainer::cross_validation_report(reports, m, t);
    result["ablation"] = ablation;
    if (!a.fold) {
      io::write_text_atomic(out_dir / "summary.json", result.dump(2) + "\n");
      run.outputs.push_back((out_dir / "summary.json").string());
    }
  }
  run.write(out_dir);
  if (a.json_out) {
    out << result.dump(2) << "\n";
  } else if (result.contains("summary")) {
    const auto& s = result["summary"];
    for (const char* k : {"dynamics", "change_point", "beat", "downbeat", "average"}) {
      char buf[120];
      if (s[k].is_null()) {
        std::snprintf(buf, sizeof buf, "%-13s n/a\n", k);
      } else {
        std::snprintf(buf, sizeof buf, "%-13s %.3f +- %.3f\n", k, s[k]["mean"].get<double>(), s[k]["std"].get<double>());
      }
      out << buf;
    }
  } else {
    out << result["training_set"].dump() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string beats;
  std::string markings;
  std::string pred_dir;
  std::string manifest;
  std::string out_file;
  bool json_out = false;
};

postprocess::EventReport load_report(const fs::path& p) {
  try {
    return postprocess::report_from_json(json::parse(read_text(p)));
  } catch (const json::exception& e) {
    throw SchemaError(p.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

int cmd_eval(const EvalArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  std::vector<trainer::RecordingScores> scores;
  if (!a.manifest.empty()) {
    if (a.pred_dir.empty()) throw ConfigError("eval: --manifest needs --pred-dir");
    run.inputs.push_back(a.manifest);
    for (const auto& e : dataset::read_corpus_manifest(a.manifest)) {
      const auto pred = fs::path(a.pred_dir) / (e.id + ".json");
      run.inputs.push_back(pred.string());
      scores.push_back(trainer::score_report(e.id, load_report(pred), dataset::load_annotation(e.beats, e.markings)));
    }
  } else {
    if (a.pred.empty() || a.beats.empty() || a.markings.empty()) {
      throw ConfigError("eval: give --pred, --beats and --markings, or --pred-dir with --manifest");
    }
    run.inputs = {a.pred, a.beats, a.markings};
    scores.push_back(trainer::score_report(fs::path(a.pred).stem().string(), load_report(a.pred),
                                           dataset::load_annotation(a.beats, a.markings)));
  }
  json recs = json::array();
  for (const auto& s : scores) recs.push_back(trainer::to_json(s));
  const auto mean = trainer::aggregate(scores);
  const json result{{"recordings", recs}, {"mean", trainer::to_json(mean)}};
  if (!a.out_file.empty()) {
    write_output(a.out_file, result.dump(2) + "\n");
    run.outputs.push_back(a.out_file);
  }
  run.write(manifest_dir_for(a.out_file));
  if (a.json_out) {
    out << result.dump(2) << "\n";
  } else {
    char buf[200];
    for (const auto& s : scores) {
      std::snprintf(buf, sizeof buf, "%-24s beat %.3f  downbeat %.3f  change_point %.3f  dynamics %s\n", s.id.c_str(),
                    s.beat.f1, s.downbeat.f1, s.change_point.f1,
                    s.dynamics.macro ? std::to_string(*s.dynamics.macro).substr(0, 5).c_str() : "n/a");
      out << buf;
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- annotate

struct AnnotateArgs {
  std::string audio;
  std::string features;
  std::string checkpoint;
  std::string out_file;
  std::string csv;
  std::string loudness_csv;
  std::string beats_from;
  bool align_downbeats = false;
  double beat_threshold = 0.5;
  double cp_threshold = 0.75;
  bool json_out = false;
};

int cmd_annotate(const AnnotateArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  if (a.audio.empty() == a.features.empty()) throw ConfigError("annotate: give either an audio file or --features");
  const auto cp = trainer::load_checkpoint(a.checkpoint);
  run.inputs.push_back(a.checkpoint);
  const auto want = cp.model.feature_type() == model::FeatureType::kLogMel ? audio::FeatureKind::kLogMel
                                                                           : audio::FeatureKind::kBssl;
  audio::FeatureFile feats;
  std::vector<std::uint8_t> active;
  std::vector<float> loudness;
  if (!a.audio.empty()) {
    run.inputs.push_back(a.audio);
    const auto spec = audio::stft_power(audio::decode_and_prepare(a.audio));
    const auto sl = audio::bssl(spec);
    feats.kind = want;
    feats.values = want == audio::FeatureKind::kLogMel ? audio::log_mel(spec).values : sl.sone;
    loudness = audio::total_loudness(sl);
    active.assign(spec.frames(), 0);
    for (std::size_t t = 0; t < spec.frames(); ++t) {
      double power = 0.0;
      for (std::size_t k = 0; k < spec.bins.rows; ++k) power += spec.bins.at(k, t);
      active[t] = power > kSilencePower;
    }
  } else {
    run.inputs.push_back(a.features);
    feats = audio::read_features(a.features);
    if (feats.kind != want || feats.values.rows != cp.model.input_bins) {
      throw ConfigError("annotate: '" + a.features + "' holds " + std::string(audio::feature_kind_name(feats.kind)) +
                        " features but the checkpoint expects " + std::string(audio::feature_kind_name(want)));
    }
    if (!a.loudness_csv.empty()) throw ConfigError("annotate: --loudness-csv needs an audio input");
  }
  if (feats.values.cols == 0) throw EmptyInputError("annotate: input has zero frames");

  auto net = trainer::instantiate(cp);
  double segment_s = 60.0;
  if (cp.meta.contains("train")) segment_s = cp.meta["train"].value("segment_s", segment_s);
  const auto probs = trainer::predict(net, feats.values, segment_s);

  std::optional<std::vector<std::size_t>> override_frames;
  if (!a.beats_from.empty()) {
    run.inputs.push_back(a.beats_from);
    const auto ann = dataset::parse_annotation(read_text(a.beats_from), "beat_index,marking\n", a.beats_from);
    std::vector<std::size_t> frames;
    for (double t : ann.beat_times) frames.push_back(dataset::time_to_frame(t));
    override_frames = frames;
  }
  postprocess::PostprocessConfig pp;
  pp.beat_threshold = a.beat_threshold;
  pp.change_point_threshold = a.cp_threshold;
  pp.align_downbeats = a.align_downbeats;
  const auto report = postprocess::make_report(probs, pp, active, override_frames);
  run.config = {{"postprocess",
                 {{"beat_threshold", pp.beat_threshold},
                  {"change_point_threshold", pp.change_point_threshold},
                  {"radius", pp.radius},
                  {"align_downbeats", pp.align_downbeats}}},
                {"model", cp.model},
                {"segment_s", segment_s}};

  const json report_json = postprocess::to_json(report);
  if (!a.out_file.empty()) {
    write_output(a.out_file, report_json.dump(2) + "\n");
    run.outputs.push_back(a.out_file);
  }
  if (!a.csv.empty()) {
    write_output(a.csv, postprocess::to_csv(report));
    run.outputs.push_back(a.csv);
  }
  if (!a.loudness_csv.empty()) {
    std::vector<char> beat(loudness.size(), 0), down(loudness.size(), 0), change(loudness.size(), 0);
    std::vector<std::string> mark(loudness.size());
    auto frame_of = [&](double s) { return std::min(dataset::time_to_frame(s), loudness.size() - 1); };
    for (std::size_t i = 0; i < report.beats.size(); ++i) {
      beat[frame_of(report.beats[i])] = 1;
      mark[frame_of(report.beats[i])] = std::string(postprocess::marking_name(report.markings[i]));
    }
    for (double s : report.downbeats) down[frame_of(s)] = 1;
    for (double s : report.change_points) change[frame_of(s)] = 1;
    std::string csv = "time,loudness_sone,is_beat,is_downbeat,is_change_point,marking\n";
    char buf[128];
    for (std::size_t t = 0; t < loudness.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%.2f,%.6g,%d,%d,%d,", postprocess::to_seconds(t), loudness[t], beat[t], down[t], change[t]);
      csv += buf + mark[t] + "\n";
    }
    write_output(a.loudness_csv, csv);
    run.outputs.push_back(a.loudness_csv);
  }
  run.write(manifest_dir_for(a.out_file));
  if (a.json_out || a.out_file.empty()) out << report_json.dump(2) << "\n";
  err << "annotate: " << report.beats.size() << " beats, " << report.downbeats.size() << " downbeats, "
      << report.change_points.size() << " change points\n";
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  std::size_t clips = 4;
  std::uint64_t seed = 86;
  double duration_s = 60.0;
  std::string feature = "bssl";
  bool no_features = false;
  bool json_out = false;
};

int cmd_synth(const SynthArgs& a, Run& run, std::ostream& out, std::ostream& err) {
  if (a.clips == 0) throw ConfigError("synth: --clips must be >= 1");
  synth::CorpusOptions opts;
  opts.clips = a.clips;
  opts.seed = a.seed;
  opts.clip.duration_s = a.duration_s;
  opts.write_features = !a.no_features;
  opts.feature = audio::parse_feature_kind(a.feature);
  const auto entries = synth::write_corpus(a.out_dir, opts);
  run.seed = a.seed;
  run.config = {{"clips", a.clips}, {"duration_s", a.duration_s}, {"feature", a.feature}, {"features", !a.no_features}};
  for (const auto& e : entries) {
    for (const auto& p : {e.audio, e.beats, e.markings}) run.outputs.push_back(p.string());
    if (opts.write_features) run.outputs.push_back(e.features.string());
  }
  const auto manifest = fs::path(a.out_dir) / "corpus.json";
  run.outputs.push_back(manifest.string());
  run.write(a.out_dir);
  if (a.json_out) {
    out << json{{"manifest", manifest.string()}, {"recordings", entries.size()}}.dump(2) << "\n";
  } else {
    err << "synth: wrote " << entries.size() << " clips and " << manifest.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Beat-aligned dynamics, beat and downbeat transcription from piano audio", "dynamark"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute feature files for every .wav in a directory");
  extract->add_option("audio_dir", ex.audio_dir, "Directory of .wav files")->required();
  extract->add_option("out_dir", ex.out_dir, "Output directory")->required();
  extract->add_option("--feature", ex.feature, "bssl or logmel")->check(CLI::IsMember({"bssl", "logmel"}));
  extract->add_flag("--force", ex.force, "Overwrite existing feature files");
  extract->add_option("--jobs", ex.jobs, "Worker threads (default: all cores)");
  extract->add_flag("--json", ex.json_out, "Print a JSON summary on stdout");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train with the fold protocol or on the whole corpus");
  train->add_option("--manifest", tr.manifest, "Corpus manifest (corpus.json)")->required();
  train->add_option("--config", tr.config, "key = value configuration file");
  train->add_option("--out", tr.out_dir, "Output directory")->required();
  auto* fold_opt = train->add_option("--fold", tr.fold, "Train and test only this fold");
  auto* all_opt = train->add_flag("--all-folds", tr.all_folds, "Run every fold (default)");
  auto* fit_opt = train->add_flag("--fit-all", tr.fit_all, "Train and select on the whole corpus, no test split");
  fold_opt->excludes(all_opt)->excludes(fit_opt);
  all_opt->excludes(fit_opt);
  train->add_option("--ablation", tr.ablation, "no_mmoe, s1, no_augment or seg30");
  train->add_option("--epochs", tr.epochs);
  train->add_option("--batch-size", tr.batch_size);
  train->add_option("--lr", tr.lr);
  train->add_option("--seed", tr.seed, "Overrides DYNAMARK_SEED and the config file");
  train->add_option("--folds", tr.folds, "Number of folds k (>= 3)");
  train->add_option("--segment-s", tr.segment_s);
  train->add_option("--tasks", tr.tasks, "Comma list of enabled tasks");
  train->add_flag("--quiet", tr.quiet, "No per-epoch log");
  train->add_flag("--json", tr.json_out, "Print the report as JSON on stdout");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score event reports against annotations");
  eval->add_option("--pred", ev.pred, "Event report JSON");
  eval->add_option("--beats", ev.beats, "Reference beats CSV");
  eval->add_option("--markings", ev.markings, "Reference markings CSV");
  eval->add_option("--pred-dir", ev.pred_dir, "Directory of <id>.json reports");
  eval->add_option("--manifest", ev.manifest, "Corpus manifest naming the references");
  eval->add_option("--out", ev.out_file, "Write the metrics JSON here");
  eval->add_flag("--json", ev.json_out, "Print the metrics as JSON on stdout");

  AnnotateArgs an;
  auto* annotate = app.add_subcommand("annotate", "Transcribe beats, downbeats and dynamics from audio");
  annotate->add_option("audio", an.audio, "Input .wav");
  annotate->add_option("--features", an.features, "Use a feature file instead of audio");
  annotate->add_option("--checkpoint", an.checkpoint, "Trained checkpoint")->required();
  annotate->add_option("--out", an.out_file, "Event report JSON path (default: stdout)");
  annotate->add_option("--csv", an.csv, "Per-beat CSV path");
  annotate->add_option("--loudness-csv", an.loudness_csv, "Per-frame total loudness and events CSV");
  annotate->add_option("--beats-from", an.beats_from, "Beats CSV to use instead of detected beats");
  annotate->add_flag("--align-downbeats", an.align_downbeats, "Snap downbeats onto detected beats");
  annotate->add_option("--beat-threshold", an.beat_threshold);
  annotate->add_option("--change-point-threshold", an.cp_threshold);
  annotate->add_flag("--json", an.json_out, "Print the report on stdout");

  SynthArgs sy;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic metronomic corpus");
  synth_cmd->add_option("--out", sy.out_dir, "Output directory")->required();
  synth_cmd->add_option("--clips", sy.clips);
  synth_cmd->add_option("--seed", sy.seed);
  synth_cmd->add_option("--duration-s", sy.duration_s);
  synth_cmd->add_option("--feature", sy.feature)->check(CLI::IsMember({"bssl", "logmel"}));
  synth_cmd->add_flag("--no-features", sy.no_features, "Skip feature extraction");
  synth_cmd->add_flag("--json", sy.json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  Run run;
  for (int i = 0; i < argc; ++i) run.argv.emplace_back(argv[i]);
  try {
    if (*extract) {
      run.command = "extract";
      return cmd_extract(ex, run, out, err);
    }
    if (*train) {
      run.command = "train";
      return cmd_train(tr, run, out, err);
    }
    if (*eval) {
      run.command = "eval";
      return cmd_eval(ev, run, out, err);
    }
    if (*annotate) {
      run.command = "annotate";
      return cmd_annotate(an, run, out, err);
    }
    run.command = "synth";
    return cmd_synth(sy, run, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
}

}  // namespace dynamark::cli
