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

#include <algorithm>
#include <random>

#include "dynamark/common/error.hpp"
#include "dynamark/model/network.hpp"
#include "dynamark/tensor/ops.hpp"

namespace dynamark::model {
namespace {

ModelConfig small_config(std::size_t s = 5) {
  ModelConfig cfg;
  cfg.scaling_factor = s;
  cfg.channels = 4;
  cfg.blocks_per_branch = 1;
  return cfg;
}

FTensor random_features(std::size_t batch, std::size_t bins, std::size_t frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 4.0f);
  std::vector<float> v(batch * bins * frames);
  for (auto& x : v) x = dist(rng);
  return FTensor::from_data({batch, bins, frames}, v);
}

TEST(Network, PaperArithmeticAtSixtySeconds) {
  Network net(ModelConfig{}, 86);
  auto r = net.forward(random_features(1, 22, 3000, 1), false);
  EXPECT_EQ(r.branch_lengths, (std::array<std::size_t, 3>{3000, 600, 120}));
  EXPECT_EQ(r.latent.shape(), (tensor::Shape{1, 3000, 8}));
  EXPECT_EQ(r.logits.dynamics.shape(), (tensor::Shape{1, 3000, 6}));
  EXPECT_EQ(r.logits.change_point.shape(), (tensor::Shape{1, 3000}));
  EXPECT_EQ(r.logits.beat.shape(), (tensor::Shape{1, 3000}));
  EXPECT_EQ(r.logits.downbeat.shape(), (tensor::Shape{1, 3000}));
}

TEST(Network, NoTemporalScalingKeepsAllBranchesAtFullLength) {
  Network net(small_config(1), 1);
  auto r = net.forward(random_features(1, 22, 50, 2), true);
  EXPECT_EQ(r.branch_lengths, (std::array<std::size_t, 3>{50, 50, 50}));
  EXPECT_EQ(net.pooling_ops(), 0u);
  Network scaled(small_config(5), 1);
  scaled.forward(random_features(1, 22, 50, 2), true);
  EXPECT_GT(scaled.pooling_ops(), 0u);
}

TEST(Network, ShortInputIsPaddedInternally) {
  Network net(small_config(5), 3);
  auto r = net.forward(random_features(1, 22, 7, 3), false);
  EXPECT_EQ(r.branch_lengths, (std::array<std::size_t, 3>{25, 5, 1}));
  EXPECT_EQ(r.latent.shape(), (tensor::Shape{1, 7, 8}));
}

TEST(Network, OutputLengthMatchesInputForRandomLengths) {
  std::mt19937_64 rng(17);
  for (std::size_t s : {1u, 2u, 3u, 5u}) {
    Network net(small_config(s), 5);
    std::uniform_int_distribution<std::size_t> len(s * s, 4000);
    for (int trial = 0; trial < 4; ++trial) {
      const std::size_t frames = trial == 0 ? s * s : len(rng);
      auto latent = net.encode(random_features(1, 22, frames, trial), false);
      EXPECT_EQ(latent.shape(), (tensor::Shape{1, frames, 8})) << "s=" << s;
    }
  }
}

TEST(Network, WrongBinCountIsConfigError) {
  Network net(small_config(), 1);
  EXPECT_THROW(net.forward(random_features(1, 128, 30, 1), false), ConfigError);
}

TEST(Network, GateRowsAreDistributions) {
  Network net(small_config(), 9);
  auto r = net.forward(random_features(2, 22, 60, 4), true);
  ASSERT_EQ(r.mmoe.gates.size(), 4u);
  for (const auto& g : r.mmoe.gates) {
    const auto d = g.data();
    for (std::size_t row = 0; row < d.size() / 8; ++row) {
      double s = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_GT(d[row * 8 + i], 0.0f);
        EXPECT_LT(d[row * 8 + i], 1.0f);
        s += d[row * 8 + i];
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Network, TaskFeaturesLieInsideExpertHull) {
  Network net(small_config(), 21);
  auto r = net.forward(random_features(1, 22, 40, 5), false);
  const auto e = r.mmoe.experts.data();  // [1, T, 8e, 8d]
  for (const auto& y : r.mmoe.task_features) {
    for (std::size_t t = 0; t < 40; ++t) {
      for (std::size_t d = 0; d < 8; ++d) {
        float lo = 1e30f, hi = -1e30f;
        for (std::size_t i = 0; i < 8; ++i) {
          lo = std::min(lo, e[(t * 8 + i) * 8 + d]);
          hi = std::max(hi, e[(t * 8 + i) * 8 + d]);
        }
        const float v = y.data()[t * 8 + d];
        EXPECT_GE(v, lo - 1e-5f);
        EXPECT_LE(v, hi + 1e-5f);
      }
    }
  }
}

void set_gate(Network& net, std::size_t k, const std::vector<float>& bias) {
  auto w = net.params().get("mmoe.gate" + std::to_string(k) + ".weight");
  std::fill(w.mutable_data().begin(), w.mutable_data().end(), 0.0f);
  auto b = net.params().get("mmoe.gate" + std::to_string(k) + ".bias");
  std::copy(bias.begin(), bias.end(), b.mutable_data().begin());
}

TEST(Mmoe, ZeroGateLogitsAverageExperts) {
  Network net(small_config(), 4);
  set_gate(net, 0, std::vector<float>(8, 0.0f));
  auto latent = net.encode(random_features(1, 22, 30, 6), false);
  auto out = net.mmoe(latent);
  const auto e = out.experts.data();
  for (std::size_t t = 0; t < 30; ++t) {
    for (std::size_t d = 0; d < 8; ++d) {
      double mean = 0.0;
      for (std::size_t i = 0; i < 8; ++i) mean += e[(t * 8 + i) * 8 + d];
      EXPECT_NEAR(out.task_features[0].data()[t * 8 + d], mean / 8.0, 1e-5);
    }
  }
}

TEST(Mmoe, SaturatedGateSelectsOneExpert) {
  Network net(small_config(), 4);
  std::vector<float> bias(8, -30.0f);
  bias[3] = 30.0f;
  set_gate(net, 2, bias);
  auto out = net.mmoe(net.encode(random_features(1, 22, 30, 7), false));
  const auto e = out.experts.data();
  for (std::size_t t = 0; t < 30; ++t) {
    for (std::size_t d = 0; d < 8; ++d) {
      EXPECT_NEAR(out.task_features[2].data()[t * 8 + d], e[(t * 8 + 3) * 8 + d], 1e-4);
    }
  }
}

TEST(Mmoe, IdenticalExpertsIgnoreGates) {
  Network net(small_config(), 4);
  for (std::size_t i = 1; i < 8; ++i) {
    for (const char* suffix : {".conv1.weight", ".conv1.bias", ".conv2.weight", ".conv2.bias"}) {
      auto src = net.params().get(std::string("mmoe.expert0") + suffix);
      auto dst = net.params().get("mmoe.expert" + std::to_string(i) + suffix);
      std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
    }
  }
  auto out = net.mmoe(net.encode(random_features(1, 22, 30, 8), false));
  const auto e = out.experts.data();
  for (const auto& y : out.task_features) {
    for (std::size_t t = 0; t < 30; ++t) {
      for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(y.data()[t * 8 + d], e[(t * 8 + 5) * 8 + d], 1e-5);
    }
  }
}

TEST(Network, WithoutMmoeShapesMatchAndCountShrinks) {
  ModelConfig cfg = small_config();
  ModelConfig plain = cfg;
  plain.use_mmoe = false;
  Network a(cfg, 1), b(plain, 1);
  auto x = random_features(1, 22, 40, 9);
  auto ra = a.forward(x, false);
  auto rb = b.forward(x, false);
  EXPECT_EQ(ra.logits.dynamics.shape(), rb.logits.dynamics.shape());
  EXPECT_EQ(ra.logits.beat.shape(), rb.logits.beat.shape());
  EXPECT_LT(param_count(plain), param_count(cfg));
  EXPECT_EQ(b.params().scalar_count(), param_count(plain));
}

TEST(Network, EvalForwardIsBitIdentical) {
  Network net(small_config(), 12);
  auto x = random_features(1, 22, 64, 10);
  auto a = net.forward(x, false);
  auto b = net.forward(x, false);
  auto same = [](const FTensor& p, const FTensor& q) {
    return std::equal(p.data().begin(), p.data().end(), q.data().begin(), q.data().end());
  };
  EXPECT_TRUE(same(a.logits.dynamics, b.logits.dynamics));
  EXPECT_TRUE(same(a.logits.beat, b.logits.beat));
  EXPECT_TRUE(same(a.logits.downbeat, b.logits.downbeat));
  EXPECT_TRUE(same(a.logits.change_point, b.logits.change_point));
}

TEST(ParamCount, HeadsAndMonotonicity) {
  std::size_t heads = 0;
  for (const auto& [name, shape] : parameter_shapes(ModelConfig{})) {
    if (name.rfind("head.", 0) == 0) heads += tensor::numel(shape);
  }
  EXPECT_EQ(heads, 81u);
  ModelConfig cfg;
  ModelConfig mel = cfg;
  mel.input_bins = 128;
  EXPECT_GT(param_count(mel), param_count(cfg));
  std::size_t prev = 0;
  for (std::size_t c = 1; c <= 40; c += 3) {
    cfg.channels = c;
    EXPECT_GT(param_count(cfg), prev);
    prev = param_count(cfg);
  }
  Network net(ModelConfig{}, 86);
  EXPECT_EQ(net.params().scalar_count(), param_count(ModelConfig{}));
}

TEST(Network, EveryParameterReceivesGradient) {
  Network net(small_config(), 33);
  auto r = net.forward(random_features(2, 22, 50, 11), true);
  auto loss = tensor::add(tensor::add(tensor::sum(tensor::mul(r.logits.dynamics, r.logits.dynamics)),
                                      tensor::sum(tensor::mul(r.logits.beat, r.logits.beat))),
                          tensor::add(tensor::sum(tensor::mul(r.logits.downbeat, r.logits.downbeat)),
                                      tensor::sum(tensor::mul(r.logits.change_point, r.logits.change_point))));
  loss.backward();
  for (const auto& [name, t] : net.params()) {
    const auto g = t.grad();
    EXPECT_TRUE(std::any_of(g.begin(), g.end(), [](float v) { return v != 0.0f; })) << name;
  }
}

TEST(Network, InitializationDependsOnlyOnSeed) {
  Network a(small_config(), 86), b(small_config(), 86), c(small_config(), 87);
  bool any_diff = false;
  for (const auto& [name, t] : a.params()) {
    const auto& u = b.params().get(name);
    EXPECT_TRUE(std::equal(t.data().begin(), t.data().end(), u.data().begin())) << name;
    const auto& v = c.params().get(name);
    any_diff |= !std::equal(t.data().begin(), t.data().end(), v.data().begin());
  }
  EXPECT_TRUE(any_diff);
}

}  // namespace
}  // namespace dynamark::model
