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

#include "dynamark/trainer/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "dynamark/common/error.hpp"
#include "dynamark/common/random.hpp"
#include "dynamark/objectives/losses.hpp"
#include "dynamark/trainer/adamw.hpp"

namespace dynamark::trainer {

using model::FTensor;

namespace {

std::size_t window_frames(double segment_s) {
  const auto w = static_cast<std::size_t>(std::llround(segment_s * dataset::kFps));
  if (w == 0) throw ConfigError("segment_s is shorter than one frame");
  return w;
}

// [1, F, n] slice of a feature matrix.
FTensor slice_features(const audio::Matrix& m, std::size_t start, std::size_t n) {
  std::vector<float> v(m.rows * n);
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::copy_n(m.values.begin() + static_cast<std::ptrdiff_t>(r * m.cols + start), n, v.begin() + static_cast<std::ptrdiff_t>(r * n));
  }
  return FTensor::from_data({1, m.rows, n}, std::move(v));
}

std::vector<float> sigmoid_of(const FTensor& t) { return postprocess::sigmoid(t.data()); }

}  // namespace

postprocess::FrameProbs predict(model::Network& net, const audio::Matrix& features, double segment_s) {
  if (features.cols == 0) throw EmptyInputError("predict: recording has zero frames");
  const std::size_t window = window_frames(segment_s);
  tensor::NoGradGuard no_grad;
  postprocess::FrameProbs out;
  out.dynamics.reserve(features.cols * postprocess::kNumClasses);
  for (std::size_t start = 0; start < features.cols; start += window) {
    const std::size_t n = std::min(window, features.cols - start);
    const auto res = net.forward(slice_features(features, start, n), false);
    const auto dyn = tensor::softmax(res.logits.dynamics);
    out.dynamics.insert(out.dynamics.end(), dyn.data().begin(), dyn.data().end());
    for (auto [dst, src] : {std::pair{&out.change_point, &res.logits.change_point},
                            std::pair{&out.beat, &res.logits.beat}, std::pair{&out.downbeat, &res.logits.downbeat}}) {
      const auto p = sigmoid_of(*src);
      dst->insert(dst->end(), p.begin(), p.end());
    }
  }
  return out;
}

double TaskScores::average() const {
  double sum = change_point + beat + downbeat;
  double n = 3.0;
  if (dynamics) {
    sum += *dynamics;
    n += 1.0;
  }
  return sum / n;
}

nlohmann::json to_json(const TaskScores& s) {
  return {{"dynamics", s.dynamics ? nlohmann::json(*s.dynamics) : nlohmann::json()},
          {"change_point", s.change_point},
          {"beat", s.beat},
          {"downbeat", s.downbeat},
          {"average", s.average()}};
}

RecordingScores score_recording(const std::string& id, const postprocess::FrameProbs& probs,
                                const dataset::RecordingAnnotation& ann, const postprocess::PostprocessConfig& pp) {
  const std::size_t frames = probs.frames();
  if (frames == 0) throw EmptyInputError("score_recording: " + id + " has zero frames");
  RecordingScores out;
  out.id = id;
  const auto report = postprocess::make_report(probs, pp);

  std::vector<double> ref_downbeats;
  std::vector<std::size_t> beat_frames;
  std::vector<std::size_t> ref_changes;
  for (std::size_t i = 0; i < ann.beat_times.size(); ++i) {
    if (ann.downbeat_flags[i]) ref_downbeats.push_back(ann.beat_times[i]);
    beat_frames.push_back(std::min(dataset::time_to_frame(ann.beat_times[i]), frames - 1));
    const std::uint8_t prev = i == 0 ? std::uint8_t{postprocess::kBlank} : ann.markings[i - 1];
    if (ann.markings[i] != prev) ref_changes.push_back(i);
  }
  out.beat = metrics::event_f1(report.beats, ann.beat_times);
  out.downbeat = metrics::event_f1(report.downbeats, ref_downbeats);
  const auto marks = postprocess::markings_at_beats(probs.dynamics, frames, beat_frames);
  out.dynamics = metrics::dynamics_macro_f1(marks, ann.markings);
  const auto changes = postprocess::change_points(probs.change_point, beat_frames, pp.change_point_threshold);
  out.change_point = metrics::changepoint_f1(changes, ref_changes);
  return out;
}

RecordingScores score_report(const std::string& id, const postprocess::EventReport& report,
                             const dataset::RecordingAnnotation& ann) {
  if (!report.markings.empty() && report.markings.size() != report.beats.size()) {
    throw SchemaError(id + ": report has " + std::to_string(report.beats.size()) + " beats but " +
                      std::to_string(report.markings.size()) + " markings");
  }
  RecordingScores out;
  out.id = id;
  std::vector<double> ref_downbeats;
  std::vector<std::size_t> ref_changes;
  for (std::size_t i = 0; i < ann.beat_times.size(); ++i) {
    if (ann.downbeat_flags[i]) ref_downbeats.push_back(ann.beat_times[i]);
    const std::uint8_t prev = i == 0 ? std::uint8_t{postprocess::kBlank} : ann.markings[i - 1];
    if (ann.markings[i] != prev) ref_changes.push_back(i);
  }
  out.beat = metrics::event_f1(report.beats, ann.beat_times);
  out.downbeat = metrics::event_f1(report.downbeats, ref_downbeats);

  std::vector<std::uint8_t> marks(ann.beat_times.size(), postprocess::kBlank);
  if (!report.markings.empty()) {
    const auto nearest = postprocess::snap_to_nearest(ann.beat_times, report.beats);
    for (std::size_t i = 0; i < marks.size(); ++i) marks[i] = report.markings[nearest[i]];
  }
  out.dynamics = metrics::dynamics_macro_f1(marks, ann.markings);

  auto changes = postprocess::snap_to_nearest(report.change_points, ann.beat_times);
  std::sort(changes.begin(), changes.end());
  changes.erase(std::unique(changes.begin(), changes.end()), changes.end());
  out.change_point = metrics::changepoint_f1(changes, ref_changes);
  return out;
}

nlohmann::json to_json(const RecordingScores& s) {
  return {{"id", s.id},
          {"beat", metrics::to_json(s.beat)},
          {"downbeat", metrics::to_json(s.downbeat)},
          {"change_point", metrics::to_json(s.change_point)},
          {"dynamics", metrics::to_json(s.dynamics)}};
}

TaskScores aggregate(const std::vector<RecordingScores>& recordings) {
  TaskScores s;
  if (recordings.empty()) return s;
  double dyn = 0.0;
  std::size_t dyn_n = 0;
  for (const auto& r : recordings) {
    s.beat += r.beat.f1;
    s.downbeat += r.downbeat.f1;
    s.change_point += r.change_point.f1;
    if (r.dynamics.macro) {
      dyn += *r.dynamics.macro;
      ++dyn_n;
    }
  }
  const double n = static_cast<double>(recordings.size());
  s.beat /= n;
  s.downbeat /= n;
  s.change_point /= n;
  if (dyn_n > 0) s.dynamics = dyn / static_cast<double>(dyn_n);
  return s;
}

EvalSummary evaluate(model::Network& net, const std::vector<const dataset::Recording*>& recordings, double segment_s) {
  EvalSummary out;
  for (const auto* r : recordings) {
    const auto probs = predict(net, r->features.values, segment_s);
    out.recordings.push_back(score_recording(r->id, probs, r->annotation));
  }
  out.mean = aggregate(out.recordings);
  return out;
}

TrainResult train_model(const std::vector<const dataset::Recording*>& train,
                        const std::vector<const dataset::Recording*>& validation, const model::ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const TrainHooks& hooks) {
  if (train.empty()) throw InputError("train_model: the training split is empty");
  if (validation.empty()) throw InputError("train_model: the validation split is empty");
  model_cfg.validate();
  train_cfg.validate();

  const dataset::SegmentConfig seg_cfg{train_cfg.segment_s, train_cfg.train_overlap()};
  std::vector<dataset::Segment> segments;
  for (const auto* r : train) {
    auto s = dataset::segment(r->id, r->features.values, r->targets, dataset::SegmentMode::kTrain, seg_cfg);
    std::move(s.begin(), s.end(), std::back_inserter(segments));
  }
  const std::size_t bins = segments.front().features.rows;
  const std::size_t window = segments.front().features.cols;

  model::Network net(model_cfg, train_cfg.seed);
  AdamW opt(train_cfg);
  std::mt19937_64 order_rng(train_cfg.seed);
  objectives::LossConfig loss_cfg;
  loss_cfg.enabled = train_cfg.enabled_tasks;

  TrainResult result;
  bool have_best = false;
  std::vector<std::size_t> order(segments.size());
  std::size_t steps = 0;
  const auto stop = [&] { return hooks.max_steps && steps >= *hooks.max_steps; };

  for (std::size_t epoch = 1; epoch <= train_cfg.epochs && !stop(); ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    rng::shuffle(order, order_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b0 = 0; b0 < order.size() && !stop(); b0 += train_cfg.batch_size) {
      const std::size_t bsz = std::min(train_cfg.batch_size, order.size() - b0);
      std::vector<float> x;
      x.reserve(bsz * bins * window);
      std::vector<objectives::FrameTargets> targets;
      for (std::size_t i = 0; i < bsz; ++i) {
        const auto& seg = segments[order[b0 + i]];
        x.insert(x.end(), seg.features.values.begin(), seg.features.values.end());
        targets.push_back(seg.targets);
      }
      net.params().zero_grads();
      const auto res = net.forward(FTensor::from_data({bsz, bins, window}, std::move(x)), true);
      const auto loss = objectives::multitask_loss(res.logits.dynamics, res.logits.change_point, res.logits.beat,
                                                   res.logits.downbeat, targets, loss_cfg);
      loss.total.backward();
      opt.step(net.params());
      const double value = loss.total_value();
      if (!std::isfinite(value)) throw NumericError("training loss became non-finite at step " + std::to_string(steps + 1));
      result.step_losses.push_back(value);
      loss_sum += value;
      ++batches;
      ++steps;
    }
    if (batches == 0) break;

    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = loss_sum / static_cast<double>(batches);
    log.validation = evaluate(net, validation, train_cfg.segment_s).mean;
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!have_best || log.validation.average() > result.best_validation.average()) {
      have_best = true;
      result.best_epoch = epoch;
      result.best_validation = log.validation;
      nlohmann::json train_json = train_cfg;
      result.best = capture(net, {{"train", train_json}, {"epoch", epoch}, {"validation", to_json(log.validation)}});
    }
    result.epochs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    if (hooks.stop_after && hooks.stop_after(log)) break;
  }
  if (!have_best) {
    nlohmann::json train_json = train_cfg;
    result.best = capture(net, {{"train", train_json}, {"epoch", 0}});
  }
  result.pooling_ops = net.pooling_ops();
  return result;
}

FoldSplit split_fold(const std::vector<dataset::Recording>& recordings, const std::map<std::string, std::size_t>& folds,
                     std::size_t fold, std::size_t k) {
  if (k < 3) throw ConfigError("cross-validation needs at least 3 folds (test, validation, train), got " + std::to_string(k));
  if (fold >= k) throw ConfigError("fold " + std::to_string(fold) + " is out of range for " + std::to_string(k) + " folds");
  FoldSplit split;
  const std::size_t val_fold = (fold + 1) % k;
  for (const auto& r : recordings) {
    const auto it = folds.find(r.annotation.piece_id);
    if (it == folds.end()) throw InputError("recording " + r.id + ": piece '" + r.annotation.piece_id + "' has no fold");
    if (it->second == fold) split.test.push_back(&r);
    else if (it->second == val_fold) split.validation.push_back(&r);
    else split.train.push_back(&r);
  }
  return split;
}

FoldReport train_fold(const std::vector<dataset::Recording>& recordings, const std::map<std::string, std::size_t>& folds,
                      std::size_t fold, const model::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                      const TrainHooks& hooks) {
  const auto split = split_fold(recordings, folds, fold, train_cfg.folds);
  if (split.test.empty()) throw InputError("fold " + std::to_string(fold) + ": the test split is empty");
  auto result = train_model(split.train, split.validation, model_cfg, train_cfg, hooks);
  FoldReport rep;
  rep.fold = fold;
  rep.best_epoch = result.best_epoch;
  rep.validation = result.best_validation;
  result.best.meta["fold"] = fold;
  auto net = instantiate(result.best);
  const auto test = evaluate(net, split.test, train_cfg.segment_s);
  rep.test = test.mean;
  rep.test_recordings = test.recordings;
  result.best.meta["test"] = to_json(rep.test);
  rep.checkpoint = std::move(result.best);
  return rep;
}

nlohmann::json cross_validation_report(const std::vector<FoldReport>& folds, const model::ModelConfig& model_cfg,
                                       const TrainConfig& train_cfg) {
  nlohmann::json per_fold = nlohmann::json::array();
  std::vector<double> dyn, cpt, beat, dbt, avg;
  for (const auto& f : folds) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : f.test_recordings) recs.push_back(to_json(r));
    per_fold.push_back({{"fold", f.fold},
                        {"best_epoch", f.best_epoch},
                        {"validation", to_json(f.validation)},
                        {"test", to_json(f.test)},
                        {"recordings", recs}});
    if (f.test.dynamics) dyn.push_back(*f.test.dynamics);
    cpt.push_back(f.test.change_point);
    beat.push_back(f.test.beat);
    dbt.push_back(f.test.downbeat);
    avg.push_back(f.test.average());
  }
  auto ms = [](const std::vector<double>& v) {
    if (v.empty()) return nlohmann::json();
    const auto m = metrics::mean_std(v);
    return nlohmann::json{{"mean", m.mean}, {"std", m.std}, {"count", m.count}};
  };
  nlohmann::json train_json = train_cfg;
  nlohmann::json summary{{"dynamics", ms(dyn)}, {"change_point", ms(cpt)}, {"beat", ms(beat)}, {"downbeat", ms(dbt)},
                         {"average", ms(avg)}};
  // Fold means of the four F1s and their average, one row of the ablation table.
  nlohmann::json table;
  for (const char* key : {"dynamics", "change_point", "beat", "downbeat", "average"}) {
    table[key] = summary[key].is_null() ? nlohmann::json() : summary[key]["mean"];
  }
  return {{"model", model_cfg}, {"train", train_json}, {"folds", per_fold}, {"summary", summary}, {"table", table}};
}

Ablation parse_ablation(const std::string& name) {
  if (name.empty() || name == "none") return Ablation::kNone;
  if (name == "no_mmoe") return Ablation::kNoMmoe;
  if (name == "s1") return Ablation::kS1;
  if (name == "no_augment") return Ablation::kNoAugment;
  if (name == "seg30") return Ablation::kSeg30;
  throw ConfigError("unknown ablation '" + name + "' (expected no_mmoe, s1, no_augment or seg30)");
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoMmoe: return "no_mmoe";
    case Ablation::kS1: return "s1";
    case Ablation::kNoAugment: return "no_augment";
    case Ablation::kSeg30: return "seg30";
  }
  return "none";
}

void apply_ablation(Ablation a, model::ModelConfig& model_cfg, TrainConfig& train_cfg) {
  switch (a) {
    case Ablation::kNone: break;
    case Ablation::kNoMmoe: model_cfg.use_mmoe = false; break;
    case Ablation::kS1: model_cfg.scaling_factor = 1; break;
    case Ablation::kNoAugment: train_cfg.augment_overlap = false; break;
    case Ablation::kSeg30: train_cfg.segment_s = 30.0; break;
  }
}

AblationReport run_ablation(const std::string& name, const std::vector<dataset::Recording>& recordings,
                            const model::ModelConfig& base_model, const TrainConfig& base_train,
                            const std::vector<std::size_t>& folds_to_run, const TrainHooks& hooks) {
  AblationReport rep;
  rep.name = name;
  rep.model = base_model;
  rep.train = base_train;
  apply_ablation(parse_ablation(name), rep.model, rep.train);
  rep.model.validate();
  rep.train.validate();

  std::vector<std::string> pieces;
  for (const auto& r : recordings) pieces.push_back(r.annotation.piece_id);
  const auto folds = dataset::make_folds(pieces, rep.train.folds, rep.train.seed);
  std::vector<std::size_t> which = folds_to_run;
  if (which.empty()) {
    which.resize(rep.train.folds);
    std::iota(which.begin(), which.end(), 0);
  }
  for (auto f : which) rep.folds.push_back(train_fold(recordings, folds, f, rep.model, rep.train, hooks));
  rep.report = cross_validation_report(rep.folds, rep.model, rep.train);
  rep.report["ablation"] = name;
  return rep;
}

}  // namespace dynamark::trainer
