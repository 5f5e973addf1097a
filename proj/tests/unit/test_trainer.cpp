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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "dynamark/common/error.hpp"
#include "dynamark/common/io.hpp"
#include "dynamark/synth/synth.hpp"
#include "dynamark/trainer/adamw.hpp"
#include "dynamark/trainer/checkpoint.hpp"
#include "dynamark/trainer/config.hpp"
#include "dynamark/trainer/train.hpp"
#include "support/tempdir.hpp"

namespace dynamark::trainer {
namespace {

using tensor::ParameterStore;

TEST(AdamW, FirstStepMovesByLearningRate) {
  ParameterStore store;
  auto& p = store.add("w", {3});
  std::fill(p.mutable_grad().begin(), p.mutable_grad().end(), 1.0f);
  AdamW opt(TrainConfig{});
  opt.step(store);
  for (float v : p.data()) EXPECT_NEAR(v, -3e-4, 1e-9);
  EXPECT_EQ(opt.step_count("w"), 1u);
}

TEST(AdamW, ZeroGradientLeavesZeroParameter) {
  ParameterStore store;
  auto& p = store.add("w", {4});
  p.mutable_grad();
  AdamW opt(TrainConfig{});
  for (int i = 0; i < 3; ++i) opt.step(store);
  for (float v : p.data()) EXPECT_EQ(v, 0.0f);
}

TEST(AdamW, UntouchedParameterIsSkipped) {
  ParameterStore store;
  auto& a = store.add("a", {2});
  auto& b = store.add("b", {2});
  std::fill(b.mutable_data().begin(), b.mutable_data().end(), 1.0f);
  a.mutable_grad()[0] = 1.0f;
  AdamW opt(TrainConfig{});
  opt.step(store);
  EXPECT_EQ(b.data()[0], 1.0f);
  EXPECT_EQ(opt.step_count("b"), 0u);
}

TEST(AdamW, WithoutDecayMatchesHandRolledAdam) {
  const std::vector<double> curv = {0.5, 1.0, 2.0, 3.0, 0.1, 4.0};
  const std::vector<double> centre = {1.0, -2.0, 0.5, 0.0, 3.0, -0.25};
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.lr = 1e-2;
  ParameterStore store;
  auto& p = store.add("theta", {curv.size()});
  AdamW opt(cfg);
  std::vector<double> theta(curv.size(), 0.0), m(curv.size(), 0.0), v(curv.size(), 0.0);
  for (int step = 1; step <= 100; ++step) {
    p.zero_grad();
    auto g = p.mutable_grad();
    for (std::size_t i = 0; i < curv.size(); ++i) g[i] = static_cast<float>(curv[i] * (p.data()[i] - centre[i]));
    opt.step(store);
    for (std::size_t i = 0; i < curv.size(); ++i) {
      const double gi = curv[i] * (theta[i] - centre[i]);
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1.0 - std::pow(0.9, step));
      const double vh = v[i] / (1.0 - std::pow(0.999, step));
      theta[i] -= cfg.lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < curv.size(); ++i) EXPECT_NEAR(p.data()[i], theta[i], 1e-6) << i;
}

TEST(AdamW, DecayIsDecoupled) {
  ParameterStore store;
  auto& p = store.add("w", {1});
  p.mutable_data()[0] = 2.0f;
  p.mutable_grad()[0] = 0.0f;
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  AdamW opt(cfg);
  opt.step(store);
  EXPECT_NEAR(p.data()[0], 2.0 * (1.0 - 0.05), 1e-6);
}

TEST(AdamW, NonFiniteGradientNamesParameter) {
  ParameterStore store;
  auto& p = store.add("head.beat.weight", {2});
  p.mutable_grad()[1] = std::nanf("");
  AdamW opt(TrainConfig{});
  try {
    opt.step(store);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("head.beat.weight"), std::string::npos);
  }
}

model::ModelConfig small_model() {
  model::ModelConfig m;
  m.channels = 4;
  m.blocks_per_branch = 1;
  return m;
}

model::FTensor fixed_input(std::size_t bins, std::size_t frames) {
  std::vector<float> v(bins * frames);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(std::sin(0.37 * static_cast<double>(i)));
  return model::FTensor::from_data({1, bins, frames}, v);
}

std::vector<float> all_logits(model::Network& net, const model::FTensor& x) {
  tensor::NoGradGuard g;
  const auto r = net.forward(x, false);
  std::vector<float> out;
  for (const auto* t : {&r.logits.dynamics, &r.logits.change_point, &r.logits.beat, &r.logits.downbeat}) {
    out.insert(out.end(), t->data().begin(), t->data().end());
  }
  return out;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  testing::TempDir dir;
  model::Network net(model::ModelConfig{}, 5);
  // Move the running statistics away from their defaults.
  net.forward(fixed_input(22, 200), true);
  const auto x = fixed_input(22, 137);
  const auto before = all_logits(net, x);
  save_checkpoint(capture(net, {{"epoch", 7}}), dir.path() / "a.dync");
  const auto cp = load_checkpoint(dir.path() / "a.dync");
  EXPECT_EQ(cp.meta["epoch"], 7);
  auto loaded = instantiate(cp);
  const auto after = all_logits(loaded, x);
  ASSERT_EQ(before.size(), after.size());
  EXPECT_EQ(std::memcmp(before.data(), after.data(), before.size() * sizeof(float)), 0);
  EXPECT_EQ(loaded.bn_states().at("input_bn").running_mean, net.bn_states().at("input_bn").running_mean);
}

TEST(Checkpoint, NamesMatchParameterStore) {
  model::Network net(small_model(), 1);
  const auto cp = capture(net);
  for (const auto& name : net.params().names()) EXPECT_TRUE(cp.tensors.count(name)) << name;
  EXPECT_EQ(cp.tensors.size(), net.params().size() + 2 * net.bn_states().size());
}

TEST(Checkpoint, TruncatedFileFailsChecksum) {
  model::Network net(small_model(), 1);
  auto bytes = serialize(capture(net));
  for (std::size_t keep : {bytes.size() - 1, bytes.size() / 2, std::size_t{13}, std::size_t{5}}) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    EXPECT_THROW(deserialize(cut), ChecksumError) << keep;
  }
  bytes[bytes.size() / 2] ^= 0x40;
  EXPECT_THROW(deserialize(bytes), ChecksumError);
}

TEST(Checkpoint, OldVersionIsRejectedByVersion) {
  model::Network net(small_model(), 1);
  auto bytes = serialize(capture(net));
  bytes[4] = 0;
  try {
    deserialize(bytes, "old.dync");
    FAIL();
  } catch (const VersionError& e) {
    EXPECT_NE(std::string(e.what()).find("version 0"), std::string::npos) << e.what();
  }
  bytes[0] = 'X';
  EXPECT_THROW(deserialize(bytes), SchemaError);
}

TEST(Checkpoint, RestoreChecksShapes) {
  model::Network a(small_model(), 1);
  model::Network b(model::ModelConfig{}, 1);
  EXPECT_THROW(restore(b, capture(a)), SchemaError);
}

TEST(TrainConfigKv, ParsesAndApplies) {
  const auto kv = parse_key_values("# comment\nlr = 0.001\nbatch_size=4\n\nenabled_tasks = beat, downbeat\nuse_mmoe=false\n",
                                   "cfg.txt");
  model::ModelConfig m;
  TrainConfig t;
  apply_key_values(kv, m, t);
  EXPECT_DOUBLE_EQ(t.lr, 0.001);
  EXPECT_EQ(t.batch_size, 4u);
  EXPECT_EQ(t.enabled_tasks, (std::array<bool, 4>{false, false, true, true}));
  EXPECT_FALSE(m.use_mmoe);
}

TEST(TrainConfigKv, Errors) {
  EXPECT_THROW(parse_key_values("lr 0.1\n", "cfg"), ConfigError);
  model::ModelConfig m;
  TrainConfig t;
  EXPECT_THROW(apply_key_values({{"learning_rate", "1"}}, m, t), ConfigError);
  EXPECT_THROW(apply_key_values({{"lr", "fast"}}, m, t), ConfigError);
  EXPECT_THROW(apply_key_values({{"enabled_tasks", "tempo"}}, m, t), ConfigError);
  t.lr = 0.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = TrainConfig{};
  t.enabled_tasks = {false, false, false, false};
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TrainConfigKv, JsonRoundTrip) {
  TrainConfig t;
  t.enabled_tasks = {true, false, true, false};
  t.segment_s = 30.0;
  nlohmann::json j = t;
  const auto back = j.get<TrainConfig>();
  EXPECT_EQ(back.enabled_tasks, t.enabled_tasks);
  EXPECT_DOUBLE_EQ(back.segment_s, 30.0);
  EXPECT_EQ(back.seed, 86u);
}

TEST(Ablations, ParseAndApply) {
  EXPECT_THROW(parse_ablation("no_attention"), ConfigError);
  for (auto name : {"no_mmoe", "s1", "no_augment", "seg30"}) EXPECT_EQ(ablation_name(parse_ablation(name)), name);
  model::ModelConfig m;
  TrainConfig t;
  apply_ablation(Ablation::kSeg30, m, t);
  EXPECT_DOUBLE_EQ(t.segment_s, 30.0);
  EXPECT_TRUE(m.use_mmoe);
  EXPECT_EQ(m.scaling_factor, 5u);
  EXPECT_TRUE(t.augment_overlap);
}

// Short clips keep the end-to-end tests fast.
class TrainerFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    synth::SynthConfig sc;
    sc.duration_s = 12.0;
    sc.min_section_bars = 1;
    sc.max_section_bars = 2;
    recordings_ = new std::vector<dataset::Recording>;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto clip = synth::synth_clip("clip" + std::to_string(i), sc, 100 + i);
      recordings_->push_back(synth::to_recording(clip, "piece" + std::to_string(i)));
    }
  }
  static void TearDownTestSuite() { delete recordings_; }

  static std::vector<const dataset::Recording*> ptrs() {
    std::vector<const dataset::Recording*> out;
    for (const auto& r : *recordings_) out.push_back(&r);
    return out;
  }
  static TrainConfig fast_cfg() {
    TrainConfig t;
    t.segment_s = 6.0;
    t.batch_size = 2;
    t.epochs = 2;
    t.folds = 3;
    return t;
  }

  static std::vector<dataset::Recording>* recordings_;
};
std::vector<dataset::Recording>* TrainerFixture::recordings_ = nullptr;

TEST_F(TrainerFixture, FirstFiveStepLossesAreBitwiseReproducible) {
  TrainHooks hooks;
  hooks.max_steps = 5;
  const auto a = train_model(ptrs(), ptrs(), small_model(), fast_cfg(), hooks);
  const auto b = train_model(ptrs(), ptrs(), small_model(), fast_cfg(), hooks);
  ASSERT_EQ(a.step_losses.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(std::memcmp(&a.step_losses[i], &b.step_losses[i], sizeof(double)), 0);
  auto other = fast_cfg();
  other.seed = 87;
  const auto c = train_model(ptrs(), ptrs(), small_model(), other, hooks);
  EXPECT_NE(a.step_losses, c.step_losses);
}

TEST_F(TrainerFixture, DisabledTaskHeadsStayAtInitialization) {
  auto cfg = fast_cfg();
  cfg.enabled_tasks = {false, false, true, false};
  const auto res = train_model(ptrs(), ptrs(), model::ModelConfig{}, cfg);
  model::Network init(model::ModelConfig{}, cfg.seed);
  const auto& trained = res.best.tensors;
  for (const auto& name : {"head.dynamics.weight", "head.dynamics.bias", "head.downbeat.weight",
                           "head.change_point.bias", "mmoe.gate0.weight", "mmoe.gate3.bias"}) {
    const auto want = init.params().get(name).data();
    EXPECT_TRUE(std::equal(want.begin(), want.end(), trained.at(name).values.begin())) << name;
  }
  const auto beat_init = init.params().get("head.beat.weight").data();
  EXPECT_FALSE(std::equal(beat_init.begin(), beat_init.end(), trained.at("head.beat.weight").values.begin()));
}

TEST_F(TrainerFixture, LossDescends) {
  auto cfg = fast_cfg();
  cfg.epochs = 50;
  const auto res = train_model(ptrs(), ptrs(), small_model(), cfg);
  ASSERT_EQ(res.epochs.size(), 50u);
  EXPECT_LT(res.epochs.back().mean_loss, res.epochs.front().mean_loss);
  // The kept checkpoint has the best validation average, earliest on ties.
  for (const auto& e : res.epochs) {
    EXPECT_LE(e.validation.average(), res.best_validation.average());
    if (e.epoch < res.best_epoch) {
      EXPECT_LT(e.validation.average(), res.best_validation.average());
    }
  }
}

TEST_F(TrainerFixture, EmptySplitIsAnError) {
  EXPECT_THROW(train_model({}, ptrs(), small_model(), fast_cfg()), InputError);
  EXPECT_THROW(train_model(ptrs(), {}, small_model(), fast_cfg()), InputError);
}

TEST_F(TrainerFixture, S1RunsFewerPoolingOps) {
  auto cfg = fast_cfg();
  cfg.epochs = 1;
  auto s1 = small_model();
  s1.scaling_factor = 1;
  const auto base = train_model(ptrs(), ptrs(), small_model(), cfg);
  const auto flat = train_model(ptrs(), ptrs(), s1, cfg);
  EXPECT_GT(base.pooling_ops, 0u);
  EXPECT_LT(flat.pooling_ops, base.pooling_ops);
}

TEST_F(TrainerFixture, SplitFoldRotatesValidation) {
  const auto folds = dataset::make_folds({"piece0", "piece1", "piece2"}, 3, 86);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto split = split_fold(*recordings_, folds, f, 3);
    ASSERT_EQ(split.test.size(), 1u);
    ASSERT_EQ(split.validation.size(), 1u);
    ASSERT_EQ(split.train.size(), 1u);
    EXPECT_EQ(folds.at(split.test[0]->annotation.piece_id), f);
    EXPECT_EQ(folds.at(split.validation[0]->annotation.piece_id), (f + 1) % 3);
  }
  EXPECT_THROW(split_fold(*recordings_, folds, 0, 2), ConfigError);
  EXPECT_THROW(split_fold(*recordings_, folds, 3, 3), ConfigError);
}

TEST_F(TrainerFixture, AblationReportAverageIsMeanOfFour) {
  auto cfg = fast_cfg();
  cfg.epochs = 1;
  const auto rep = run_ablation("no_mmoe", *recordings_, small_model(), cfg, {0});
  EXPECT_FALSE(rep.model.use_mmoe);
  ASSERT_EQ(rep.folds.size(), 1u);
  const auto& table = rep.report["table"];
  const auto& t = rep.folds[0].test;
  ASSERT_TRUE(t.dynamics.has_value());
  const double mean4 = (*t.dynamics + t.change_point + t.beat + t.downbeat) / 4.0;
  EXPECT_NEAR(table["average"].get<double>(), mean4, 1e-12);
  EXPECT_EQ(rep.report["model"]["use_mmoe"], false);
}

TEST_F(TrainerFixture, PerfectProbabilitiesScoreOne) {
  const auto& r = recordings_->front();
  const std::size_t frames = r.features.values.cols;
  postprocess::FrameProbs p;
  p.beat.assign(frames, 0.0f);
  p.downbeat.assign(frames, 0.0f);
  p.change_point.assign(frames, 0.0f);
  p.dynamics.assign(frames * postprocess::kNumClasses, 0.0f);
  for (std::size_t t = 0; t < frames; ++t) {
    p.beat[t] = r.targets.beat[t];
    p.downbeat[t] = r.targets.downbeat[t];
    p.change_point[t] = r.targets.change_point[t];
    p.dynamics[t * postprocess::kNumClasses + r.targets.dynamic_class[t]] = 1.0f;
  }
  const auto s = score_recording(r.id, p, r.annotation);
  EXPECT_DOUBLE_EQ(s.beat.f1, 1.0);
  EXPECT_DOUBLE_EQ(s.downbeat.f1, 1.0);
  EXPECT_DOUBLE_EQ(s.change_point.f1, 1.0);
  ASSERT_TRUE(s.dynamics.macro.has_value());
  EXPECT_DOUBLE_EQ(*s.dynamics.macro, 1.0);
}

TEST_F(TrainerFixture, PredictCoversEveryFrame) {
  model::Network net(small_model(), 3);
  const auto& feats = recordings_->front().features.values;
  const auto p = predict(net, feats, 2.5);
  EXPECT_EQ(p.frames(), feats.cols);
  EXPECT_EQ(p.dynamics.size(), feats.cols * postprocess::kNumClasses);
  for (std::size_t t = 0; t < feats.cols; t += 97) {
    float sum = 0.0f;
    for (std::size_t c = 0; c < postprocess::kNumClasses; ++c) sum += p.dynamics[t * postprocess::kNumClasses + c];
    EXPECT_NEAR(sum, 1.0f, 1e-5f);
  }
}

}  // namespace
}  // namespace dynamark::trainer
