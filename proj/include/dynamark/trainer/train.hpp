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

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamark/dataset/corpus.hpp"
#include "dynamark/metrics/f1.hpp"
#include "dynamark/model/network.hpp"
#include "dynamark/postprocess/events.hpp"
#include "dynamark/trainer/checkpoint.hpp"
#include "dynamark/trainer/config.hpp"

namespace dynamark::trainer {

// Frame-wise probabilities for a whole recording. The features are cut into
// non-overlapping windows of `segment_s` seconds (the last one shorter) and
// run through the network in eval mode.
postprocess::FrameProbs predict(model::Network& net, const audio::Matrix& features, double segment_s);

struct RecordingScores {
  std::string id;
  metrics::F1Result beat;
  metrics::F1Result downbeat;
  metrics::F1Result change_point;
  metrics::DynamicsF1 dynamics;
};

// Mean over recordings of each task's F1. Dynamics averages only recordings
// where the macro F1 is defined and is absent if none is.
struct TaskScores {
  std::optional<double> dynamics;
  double change_point = 0.0;
  double beat = 0.0;
  double downbeat = 0.0;

  // Mean of the available task scores.
  double average() const;
};

nlohmann::json to_json(const TaskScores& s);

// Scores one recording's frame probabilities against its annotation.
// Beat-wise dynamics are read at the ground-truth beat frames; predicted
// change points are snapped to the nearest ground-truth beat.
RecordingScores score_recording(const std::string& id, const postprocess::FrameProbs& probs,
                                const dataset::RecordingAnnotation& ann,
                                const postprocess::PostprocessConfig& pp = {});

// Scores a discrete EventReport against an annotation. Each ground-truth beat
// takes the marking of the nearest predicted beat (blank when the report has
// no markings); predicted change points are snapped to the nearest
// ground-truth beat.
RecordingScores score_report(const std::string& id, const postprocess::EventReport& report,
                             const dataset::RecordingAnnotation& ann);

nlohmann::json to_json(const RecordingScores& s);

struct EvalSummary {
  std::vector<RecordingScores> recordings;
  TaskScores mean;
};

TaskScores aggregate(const std::vector<RecordingScores>& recordings);
EvalSummary evaluate(model::Network& net, const std::vector<const dataset::Recording*>& recordings, double segment_s);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  TaskScores validation;
  double seconds = 0.0;
};

struct TrainResult {
  Checkpoint best;  // parameters of the best validation epoch
  std::size_t best_epoch = 0;
  TaskScores best_validation;
  std::vector<double> step_losses;
  std::vector<EpochLog> epochs;
  std::size_t pooling_ops = 0;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  // Stops after this many optimizer steps when set (used by determinism checks).
  std::optional<std::size_t> max_steps;
  // Ends training after the current epoch when it returns true.
  std::function<bool(const EpochLog&)> stop_after;
};

// Trains on `train`, selects the checkpoint with the best mean validation F1
// (earliest epoch on ties). Throws InputError when either split is empty.
TrainResult train_model(const std::vector<const dataset::Recording*>& train,
                        const std::vector<const dataset::Recording*>& validation, const model::ModelConfig& model_cfg,
                        const TrainConfig& train_cfg, const TrainHooks& hooks = {});

struct FoldSplit {
  std::vector<const dataset::Recording*> train;
  std::vector<const dataset::Recording*> validation;
  std::vector<const dataset::Recording*> test;
};

// Fold f is the test set, fold (f + 1) mod k validates, the rest trains. Needs k >= 3.
FoldSplit split_fold(const std::vector<dataset::Recording>& recordings,
                     const std::map<std::string, std::size_t>& folds, std::size_t fold, std::size_t k);

struct FoldReport {
  std::size_t fold = 0;
  std::size_t best_epoch = 0;
  TaskScores validation;
  TaskScores test;
  std::vector<RecordingScores> test_recordings;
  Checkpoint checkpoint;
};

FoldReport train_fold(const std::vector<dataset::Recording>& recordings,
                      const std::map<std::string, std::size_t>& folds, std::size_t fold,
                      const model::ModelConfig& model_cfg, const TrainConfig& train_cfg, const TrainHooks& hooks = {});

// Per-fold test scores plus mean and standard deviation per task and for the average.
nlohmann::json cross_validation_report(const std::vector<FoldReport>& folds, const model::ModelConfig& model_cfg,
                                       const TrainConfig& train_cfg);

enum class Ablation { kNone, kNoMmoe, kS1, kNoAugment, kSeg30 };
Ablation parse_ablation(const std::string& name);
std::string ablation_name(Ablation a);
// Applies exactly one modification to copies of the configs.
void apply_ablation(Ablation a, model::ModelConfig& model_cfg, TrainConfig& train_cfg);

struct AblationReport {
  std::string name;
  model::ModelConfig model;
  TrainConfig train;
  std::vector<FoldReport> folds;
  nlohmann::json report;  // four F1s and their average
};

// Runs the cross-validation protocol on the requested folds (all when empty).
AblationReport run_ablation(const std::string& name, const std::vector<dataset::Recording>& recordings,
                            const model::ModelConfig& base_model, const TrainConfig& base_train,
                            const std::vector<std::size_t>& folds_to_run = {}, const TrainHooks& hooks = {});

}  // namespace dynamark::trainer
