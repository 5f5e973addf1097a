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

#include "dynamark/objectives/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dynamark/common/error.hpp"
#include "dynamark/tensor/ops.hpp"

namespace dynamark::objectives {

using tensor::Node;
using tensor::Tensor;

FrameTargets FrameTargets::empty(std::size_t frames) {
  FrameTargets t;
  t.beat.assign(frames, 0);
  t.downbeat.assign(frames, 0);
  t.change_point.assign(frames, 0);
  t.dynamic_class.assign(frames, 0);
  t.beat_mask.assign(frames, 0);
  t.valid.assign(frames, 1);
  return t;
}

namespace {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct SequenceView {
  std::size_t batch = 0;
  std::size_t frames = 0;
};

template <typename T>
SequenceView binary_view(const Tensor<T>& logits, std::size_t n_targets, const char* op) {
  if (!logits.defined() || (logits.rank() != 1 && logits.rank() != 2)) {
    throw ShapeError(std::string(op) + ": expected logits [B, T] or [T], got " +
                     (logits.defined() ? tensor::to_string(logits.shape()) : std::string("<undefined>")));
  }
  SequenceView v;
  v.batch = logits.rank() == 2 ? logits.dim(0) : 1;
  v.frames = logits.shape().back();
  if (n_targets != v.batch) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(v.batch) + " target sequences, got " +
                     std::to_string(n_targets));
  }
  return v;
}

void check_mask(const Mask& m, std::size_t frames, const char* op, const char* what) {
  if (m.size() != frames) {
    throw ShapeError(std::string(op) + ": expected " + what + " of length " + std::to_string(frames) + ", got " +
                     std::to_string(m.size()));
  }
}

bool is_valid(std::span<const Mask> valid, std::size_t b, std::size_t t) {
  return valid.empty() || valid[b][t] != 0;
}

// Term layout of the shift-tolerant loss for one sequence.
struct ToleranceTerms {
  std::vector<std::size_t> pooled_index;  // argmax over the valid window, per frame
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

template <typename T>
ToleranceTerms tolerance_terms(const T* x, const Mask& target, std::span<const Mask> valid, std::size_t b,
                               std::size_t frames, std::size_t tolerance) {
  ToleranceTerms terms;
  terms.pooled_index.assign(frames, 0);
  // Distance to the nearest valid positive, two sweeps.
  const std::size_t far = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> dist(frames, far);
  std::size_t last = far;
  for (std::size_t t = 0; t < frames; ++t) {
    if (target[t] && is_valid(valid, b, t)) last = t;
    if (last != far) dist[t] = t - last;
  }
  last = far;
  for (std::size_t t = frames; t-- > 0;) {
    if (target[t] && is_valid(valid, b, t)) last = t;
    if (last != far) dist[t] = std::min(dist[t], last - t);
  }
  for (std::size_t t = 0; t < frames; ++t) {
    if (!is_valid(valid, b, t)) continue;
    const std::size_t lo = t >= tolerance ? t - tolerance : 0;
    const std::size_t hi = std::min(frames - 1, t + tolerance);
    std::size_t best = t;
    for (std::size_t u = lo; u <= hi; ++u) {
      if (is_valid(valid, b, u) && x[u] > x[best]) best = u;
      else if (is_valid(valid, b, u) && x[u] == x[best] && u < best) best = u;
    }
    terms.pooled_index[t] = best;
    if (target[t]) {
      terms.positives.push_back(t);
    } else if (dist[t] > exclusion_radius(tolerance)) {
      terms.negatives.push_back(t);
    }
  }
  return terms;
}

}  // namespace

double default_pos_weight(std::span<const Mask> targets, std::span<const Mask> valid, std::size_t tolerance) {
  std::size_t pos = 0, neg = 0;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    const Mask& target = targets[b];
    const std::size_t frames = target.size();
    std::vector<float> zeros(frames, 0.0f);
    const auto terms = tolerance_terms(zeros.data(), target, valid, b, frames, tolerance);
    pos += terms.positives.size();
    neg += terms.negatives.size();
  }
  if (pos == 0) return kMinPosWeight;
  return std::clamp(static_cast<double>(neg) / static_cast<double>(pos), kMinPosWeight, kMaxPosWeight);
}

template <typename T>
Tensor<T> shift_tolerant_wbce(const Tensor<T>& logits, std::span<const Mask> targets, std::span<const Mask> valid,
                              std::size_t tolerance, double pos_weight) {
  constexpr const char* op = "shift_tolerant_wbce";
  const auto view = binary_view(logits, targets.size(), op);
  if (!valid.empty() && valid.size() != view.batch) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(view.batch) + " valid masks, got " +
                     std::to_string(valid.size()));
  }
  if (!(pos_weight > 0.0)) throw ConfigError(std::string(op) + ": pos_weight must be positive");
  std::vector<ToleranceTerms> all(view.batch);
  std::size_t count = 0;
  for (std::size_t b = 0; b < view.batch; ++b) {
    check_mask(targets[b], view.frames, op, "target");
    if (!valid.empty()) check_mask(valid[b], view.frames, op, "valid mask");
    all[b] = tolerance_terms(logits.data().data() + b * view.frames, targets[b], valid, b, view.frames, tolerance);
    count += all[b].positives.size() + all[b].negatives.size();
  }
  double total = 0.0;
  for (std::size_t b = 0; b < view.batch; ++b) {
    const T* x = logits.data().data() + b * view.frames;
    for (std::size_t t : all[b].positives) total += pos_weight * softplus(-static_cast<double>(x[all[b].pooled_index[t]]));
    for (std::size_t t : all[b].negatives) total += softplus(static_cast<double>(x[all[b].pooled_index[t]]));
  }
  const double norm = count > 0 ? 1.0 / static_cast<double>(count) : 0.0;
  const std::size_t frames = view.frames;
  return tensor::make_result<T>(
      {}, {static_cast<T>(total * norm)}, {logits},
      [all = std::move(all), frames, norm, pos_weight](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        const T* x = self.parents[0]->value.data();
        const double up = static_cast<double>(self.grad[0]) * norm;
        for (std::size_t b = 0; b < all.size(); ++b) {
          const std::size_t off = b * frames;
          for (std::size_t t : all[b].positives) {
            const std::size_t i = off + all[b].pooled_index[t];
            g[i] += static_cast<T>(up * pos_weight * (sigmoid(static_cast<double>(x[i])) - 1.0));
          }
          for (std::size_t t : all[b].negatives) {
            const std::size_t i = off + all[b].pooled_index[t];
            g[i] += static_cast<T>(up * sigmoid(static_cast<double>(x[i])));
          }
        }
      });
}

template <typename T>
Tensor<T> masked_ce(const Tensor<T>& logits, std::span<const std::vector<std::uint8_t>> classes,
                    std::span<const Mask> mask) {
  constexpr const char* op = "masked_ce";
  if (!logits.defined() || (logits.rank() != 2 && logits.rank() != 3)) {
    throw ShapeError(std::string(op) + ": expected logits [B, T, C] or [T, C], got " +
                     (logits.defined() ? tensor::to_string(logits.shape()) : std::string("<undefined>")));
  }
  const std::size_t batch = logits.rank() == 3 ? logits.dim(0) : 1;
  const std::size_t frames = logits.dim(logits.rank() - 2);
  const std::size_t n_cls = logits.shape().back();
  if (classes.size() != batch || mask.size() != batch) {
    throw ShapeError(std::string(op) + ": expected " + std::to_string(batch) + " class/mask sequences, got " +
                     std::to_string(classes.size()) + "/" + std::to_string(mask.size()));
  }
  std::vector<std::size_t> rows;
  std::vector<std::uint8_t> labels;
  for (std::size_t b = 0; b < batch; ++b) {
    check_mask(classes[b], frames, op, "class sequence");
    check_mask(mask[b], frames, op, "beat mask");
    for (std::size_t t = 0; t < frames; ++t) {
      if (!mask[b][t]) continue;
      if (classes[b][t] >= n_cls) {
        throw InputError(std::string(op) + ": class id " + std::to_string(classes[b][t]) + " at frame " +
                         std::to_string(t) + " is outside [0, " + std::to_string(n_cls) + ")");
      }
      rows.push_back(b * frames + t);
      labels.push_back(classes[b][t]);
    }
  }
  const T* z = logits.data().data();
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const T* row = z + rows[r] * n_cls;
    double mx = row[0];
    for (std::size_t c = 1; c < n_cls; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double s = 0.0;
    for (std::size_t c = 0; c < n_cls; ++c) s += std::exp(static_cast<double>(row[c]) - mx);
    total += mx + std::log(s) - static_cast<double>(row[labels[r]]);
  }
  const double norm = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  return tensor::make_result<T>(
      {}, {static_cast<T>(total * norm)}, {logits},
      [rows = std::move(rows), labels = std::move(labels), n_cls, norm](Node<T>& self) {
        auto& g = self.parents[0]->ensure_grad();
        const T* z = self.parents[0]->value.data();
        const double up = static_cast<double>(self.grad[0]) * norm;
        std::vector<double> p(n_cls);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const T* row = z + rows[r] * n_cls;
          double mx = row[0];
          for (std::size_t c = 1; c < n_cls; ++c) mx = std::max(mx, static_cast<double>(row[c]));
          double s = 0.0;
          for (std::size_t c = 0; c < n_cls; ++c) s += (p[c] = std::exp(static_cast<double>(row[c]) - mx));
          T* gr = g.data() + rows[r] * n_cls;
          for (std::size_t c = 0; c < n_cls; ++c) {
            gr[c] += static_cast<T>(up * (p[c] / s - (c == labels[r] ? 1.0 : 0.0)));
          }
        }
      });
}

LossReport multitask_loss(const Tensor<float>& dynamics, const Tensor<float>& change_point, const Tensor<float>& beat,
                          const Tensor<float>& downbeat, std::span<const FrameTargets> targets, const LossConfig& cfg) {
  const std::size_t batch = targets.size();
  std::vector<Mask> valid(batch), beats(batch), downbeats(batch), cps(batch), ce_mask(batch);
  std::vector<std::vector<std::uint8_t>> classes(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& t = targets[b];
    valid[b] = t.valid.empty() ? Mask(t.frames(), 1) : t.valid;
    beats[b] = t.beat;
    downbeats[b] = t.downbeat;
    cps[b] = t.change_point;
    classes[b] = t.dynamic_class;
    ce_mask[b].resize(t.frames());
    for (std::size_t i = 0; i < t.frames(); ++i) ce_mask[b][i] = t.beat_mask[i] && valid[b][i];
  }
  LossReport report;
  std::vector<Tensor<float>> terms;
  auto binary = [&](const Tensor<float>& logits, const std::vector<Mask>& target, double& slot) {
    const double w = default_pos_weight(target, valid, cfg.tolerance);
    auto term = shift_tolerant_wbce<float>(logits, target, valid, cfg.tolerance, w);
    slot = term.item();
    terms.push_back(term);
  };
  if (cfg.enabled[0]) {
    auto term = masked_ce<float>(dynamics, classes, ce_mask);
    report.dyn = term.item();
    terms.push_back(term);
  }
  if (cfg.enabled[1]) binary(change_point, cps, report.cpt);
  if (cfg.enabled[2]) binary(beat, beats, report.beat);
  if (cfg.enabled[3]) binary(downbeat, downbeats, report.dbt);
  if (terms.empty()) throw ConfigError("multitask_loss: no task enabled");
  report.total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) report.total = tensor::add(report.total, terms[i]);
  return report;
}

template Tensor<float> shift_tolerant_wbce(const Tensor<float>&, std::span<const Mask>, std::span<const Mask>,
                                           std::size_t, double);
template Tensor<double> shift_tolerant_wbce(const Tensor<double>&, std::span<const Mask>, std::span<const Mask>,
                                            std::size_t, double);
template Tensor<float> masked_ce(const Tensor<float>&, std::span<const std::vector<std::uint8_t>>,
                                 std::span<const Mask>);
template Tensor<double> masked_ce(const Tensor<double>&, std::span<const std::vector<std::uint8_t>>,
                                  std::span<const Mask>);

}  // namespace dynamark::objectives
