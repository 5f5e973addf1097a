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
#include <span>
#include <string_view>
#include <vector>

#include "dynamark/tensor/tensor.hpp"

namespace dynamark::tensor {

// Running statistics owned by the model; updated only by training-mode calls.
template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

// Elementwise.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> relu(const Tensor<T>& x);

// Reductions.
template <typename T> Tensor<T> sum(const Tensor<T>& x);

// Softmax over the last axis.
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

// x: [..., in], weight: [out, in], bias: [out] or undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Batched matrix product a: [..., M, K] times b: [..., K, N]; batch dims must match.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// x: [B, Cin, L], weight: [Cout, Cin, K] with odd K; length-preserving zero padding.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// x: [B, Cin, H, W], weight: [Cout, Cin, KH, KW] with odd kernels; "same" padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// x: [B, Cin, L], weight: [Cin, Cout, K]; output length (L - 1) * stride + K.
template <typename T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride);

// Non-overlapping max pooling along the last axis (kernel == stride).
// Output length is floor(L / stride); ties resolve to the earliest element.
template <typename T> Tensor<T> maxpool1d(const Tensor<T>& x, std::size_t stride);

// x: [B, C, H, W]; per-channel statistics over (B, H, W).
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, bool training);

// Normalizes over the last axis.
template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    T eps = T(1e-5));

// Single-head scaled dot-product attention. q: [B, T, D], k: [B, S, D], v: [B, S, E].
// Attention probabilities are recomputed in the backward pass instead of stored.
template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v);

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis);

// Layout helpers.
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T> Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& perm);
template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t start, std::size_t length);
template <typename T> Tensor<T> pad_right(const Tensor<T>& x, std::size_t axis, std::size_t amount);

// The network's layer vocabulary, addressable by kind so that every layer can be
// driven through one entry point (used by the gradient-check suite).
enum class LayerKind {
  kConv1d,
  kConv2d,
  kConvTranspose1d,
  kLinear,
  kRelu,
  kSoftmax,
  kBatchNorm2d,
  kMaxPool1d,
  kAdd,
  kConcat,
  kLayerNorm,
  kAttention,
};

std::string_view layer_name(LayerKind kind);
std::span<const LayerKind> all_layer_kinds();

struct LayerOptions {
  std::size_t stride = 1;  // conv_transpose1d, maxpool1d
  std::size_t axis = 0;    // concat
  bool training = true;    // batchnorm2d
};

// inputs/params follow the argument order of the corresponding free function:
// conv*/linear: inputs {x}, params {weight, bias}; batchnorm2d/layernorm: params
// {gamma, beta}; add: inputs {a, b}; attention: inputs {q, k, v}; concat: inputs {parts...}.
template <typename T>
Tensor<T> layer_forward(LayerKind kind, std::span<const Tensor<T>> inputs,
                        std::span<const Tensor<T>> params, const LayerOptions& options = {},
                        BatchNormState<T>* bn_state = nullptr);

}  // namespace dynamark::tensor
