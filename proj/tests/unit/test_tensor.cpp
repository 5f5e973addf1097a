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
#include <numeric>
#include <random>

#include "dynamark/tensor/ops.hpp"
#include "dynamark/tensor/parameter_store.hpp"
#include "support/gradcheck.hpp"
#include "support/layer_cases.hpp"

namespace dynamark::tensor {
namespace {

using testing::DTensor;
using testing::distinct_tensor;
using testing::grad_check;
using testing::off_kink_tensor;
using testing::random_tensor;
using testing::weighted_sum;
using testing::make_case;
using testing::LayerCase;
using FTensor = Tensor<float>;

constexpr int kSeeds = 10;
constexpr double kTolerance = 1e-3;

class LayerGradTest : public ::testing::TestWithParam<LayerKind> {};

TEST_P(LayerGradTest, AnalyticMatchesFiniteDifferences) {
  const LayerKind kind = GetParam();
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    LayerCase c = make_case(kind, rng);
    const std::size_t n_in = c.inputs.size();
    std::vector<DTensor> leaves = c.inputs;
    leaves.insert(leaves.end(), c.params.begin(), c.params.end());
    BatchNormState<double> bn(kind == LayerKind::kBatchNorm2d ? c.inputs[0].dim(1) : 0);
    auto f = [&](const std::vector<DTensor>& l) {
      std::vector<DTensor> in(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(n_in));
      std::vector<DTensor> ps(l.begin() + static_cast<std::ptrdiff_t>(n_in), l.end());
      return weighted_sum(layer_forward<double>(kind, in, ps, c.options, &bn), 77 + seed);
    };
    auto result = grad_check(f, leaves);
    EXPECT_LT(result.max_rel_error, kTolerance)
        << layer_name(kind) << " seed " << seed << " worst at " << result.worst;
  }
}

INSTANTIATE_TEST_SUITE_P(AllLayers, LayerGradTest, ::testing::ValuesIn(all_layer_kinds().begin(), all_layer_kinds().end()),
                         [](const auto& info) { return std::string(layer_name(info.param)); });

TEST(LayerGradTest, BatchNormEvalMode) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    BatchNormState<double> bn(2);
    bn.running_mean = {0.3, -0.2};
    bn.running_var = {1.5, 0.7};
    auto f = [&](const std::vector<DTensor>& l) {
      return weighted_sum(batchnorm2d(l[0], l[1], l[2], bn, false), seed);
    };
    auto result = grad_check(f, {random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng), random_tensor({2}, rng)});
    EXPECT_LT(result.max_rel_error, kTolerance);
  }
}

TEST(LayerGradTest, LayoutHelpersAndMatmul) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(seed);
    auto f = [&](const std::vector<DTensor>& l) {
      auto p = permute(l[0], {0, 2, 1});                    // [2,4,3]
      auto m = matmul(p, l[1]);                              // [2,4,5]
      auto r = reshape(m, {2, 20});
      auto s = slice(r, 1, 3, 12);
      auto padded = pad_right(s, 1, 2);
      return weighted_sum(scale(padded, 0.7), seed);
    };
    auto result = grad_check(f, {random_tensor({2, 3, 4}, rng), random_tensor({2, 3, 5}, rng)});
    EXPECT_LT(result.max_rel_error, kTolerance);
  }
}

TEST(TensorOps, Conv1dIdentityKernel) {
  auto x = FTensor::from_data({1, 1, 3}, {1, 2, 3});
  auto w = FTensor::from_data({1, 1, 3}, {0, 1, 0});
  auto y = conv1d(x, w, FTensor());
  ASSERT_EQ(y.shape(), (Shape{1, 1, 3}));
  EXPECT_EQ(std::vector<float>(y.data().begin(), y.data().end()), (std::vector<float>{1, 2, 3}));
}

TEST(TensorOps, SoftmaxOfZerosIsUniform) {
  auto y = softmax(FTensor::zeros({8}));
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.125f);
}

TEST(TensorOps, PoolAndTransposedConvLengths) {
  auto x = FTensor::zeros({1, 2, 3000});
  auto pooled = maxpool1d(x, 5);
  EXPECT_EQ(pooled.dim(2), 600u);
  auto w = FTensor::zeros({2, 2, 5});
  EXPECT_EQ(conv_transpose1d(pooled, w, FTensor(), 5).dim(2), 3000u);
  for (std::size_t s = 1; s <= 7; ++s) {
    for (std::size_t len = s; len <= 40; len += s) {
      auto p = maxpool1d(FTensor::zeros({1, 1, len}), s);
      auto up = conv_transpose1d(p, FTensor::zeros({1, 1, s}), FTensor(), s);
      EXPECT_EQ(up.dim(2), len);
    }
  }
}

TEST(TensorOps, ShapeErrorsNameOpExpectedAndGot) {
  auto x = FTensor::zeros({1, 3, 5});
  auto w = FTensor::zeros({2, 4, 3});
  try {
    conv1d(x, w, FTensor());
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("conv1d"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected"), std::string::npos) << msg;
    EXPECT_NE(msg.find("got"), std::string::npos) << msg;
  }
  EXPECT_THROW(add(FTensor::zeros({2}), FTensor::zeros({3})), ShapeError);
  EXPECT_THROW(matmul(FTensor::zeros({2, 3}), FTensor::zeros({4, 2})), ShapeError);
  EXPECT_THROW(linear(FTensor::zeros({2, 3}), FTensor::zeros({4, 2}), FTensor()), ShapeError);
}

TEST(TensorOps, SoftmaxRowsSumToOneAndPositive) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> dist(-20.0f, 20.0f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> data(4 * 9);
    for (auto& v : data) v = dist(rng);
    auto y = softmax(FTensor::from_data({4, 9}, data));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 9; ++c) {
        const float p = y.data()[r * 9 + c];
        EXPECT_GT(p, 0.0f);
        s += p;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(TensorOps, ConvAndLinearAreLinearInInput) {
  std::mt19937_64 rng(11);
  auto xd = random_tensor({2, 3, 9}, rng, -1, 1, false);
  auto wd = random_tensor({4, 3, 3}, rng, -1, 1, false);
  auto y1 = conv1d(xd, wd, DTensor());
  auto y2 = conv1d(scale(xd, 2.5), wd, DTensor());
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_NEAR(y2.data()[i], 2.5 * y1.data()[i], 1e-12);

  auto xl = random_tensor({5, 6}, rng, -1, 1, false);
  auto wl = random_tensor({3, 6}, rng, -1, 1, false);
  auto l1 = linear(xl, wl, DTensor());
  auto l2 = linear(scale(xl, -0.5), wl, DTensor());
  for (std::size_t i = 0; i < l1.size(); ++i) EXPECT_NEAR(l2.data()[i], -0.5 * l1.data()[i], 1e-12);
}

TEST(Backward, LinearSumGivesOuterProduct) {
  auto w = FTensor::from_data({2, 3}, {0.1f, 0.2f, 0.3f, -0.4f, 0.5f, 0.6f}, true);
  auto x = FTensor::from_data({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  sum(linear(x, w, FTensor())).backward();
  // d/dW_oi sum_n sum_o W_oi x_ni = sum_n x_ni, independent of o.
  const float col[3] = {22, 26, 30};
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(w.grad()[o * 3 + i], col[i]);
  }
}

TEST(Backward, AccumulatesAcrossCalls) {
  auto w = FTensor::from_data({3}, {1, 2, 3}, true);
  auto x = FTensor::from_data({3}, {4, 5, 6});
  auto loss = sum(mul(w, x));
  loss.backward();
  std::vector<float> once(w.grad().begin(), w.grad().end());
  loss.backward();
  for (int i = 0; i < 3; ++i) EXPECT_FLOAT_EQ(w.grad()[i], 2 * once[i]);
}

TEST(Backward, NonScalarLossThrows) {
  auto w = FTensor::from_data({3}, {1, 2, 3}, true);
  EXPECT_THROW(relu(w).backward(), ShapeError);
}

TEST(Backward, UnreachableParameterKeepsZeroGrad) {
  ParameterStore store;
  auto& a = store.add("a", {2});
  auto& b = store.add("b", {2});
  a.mutable_data()[0] = 1.0f;
  sum(mul(a, a)).backward();
  EXPECT_FALSE(b.grad_touched());
  for (float g : b.grad()) EXPECT_EQ(g, 0.0f);
}

TEST(ZeroGrads, ClearsAndIsIdempotent) {
  ParameterStore store;
  auto& a = store.add("a", {3});
  for (auto& v : a.mutable_data()) v = 0.5f;
  sum(mul(a, a)).backward();
  store.zero_grads();
  for (float g : a.grad()) EXPECT_EQ(g, 0.0f);
  store.zero_grads();
  for (float g : a.grad()) EXPECT_EQ(g, 0.0f);
  ParameterStore empty;
  EXPECT_NO_THROW(empty.zero_grads());
}

TEST(Determinism, ForwardAndGradientsBitIdentical) {
  auto run = [] {
    std::mt19937_64 rng(42);
    std::vector<float> xv(2 * 3 * 12), wv(4 * 3 * 3);
    std::vector<float> qv(2 * 12 * 4);
    uniform_fill(xv, 1.0f, rng);
    uniform_fill(wv, 0.5f, rng);
    auto x = FTensor::from_data({2, 3, 12}, xv);
    auto w = FTensor::from_data({4, 3, 3}, wv, true);
    auto h = relu(conv1d(x, w, FTensor()));
    auto t = permute(h, {0, 2, 1});
    auto y = attention(t, t, t);
    auto loss = sum(mul(y, y));
    loss.backward();
    std::vector<float> out(y.data().begin(), y.data().end());
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(ParameterStoreTest, LexicographicOrderAndUniqueNames) {
  ParameterStore store;
  store.add("b.weight", {2});
  store.add("a.weight", {3, 2});
  store.add("a.bias", {3});
  EXPECT_EQ(store.names(), (std::vector<std::string>{"a.bias", "a.weight", "b.weight"}));
  EXPECT_EQ(store.scalar_count(), 11u);
  EXPECT_THROW(store.add("a.bias", {1}), std::exception);
}

}  // namespace
}  // namespace dynamark::tensor
