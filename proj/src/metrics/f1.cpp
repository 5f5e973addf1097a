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

#include "dynamark/metrics/f1.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynamark/common/error.hpp"

namespace dynamark::metrics {

F1Result make_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  F1Result r{0.0, 0.0, 0.0, tp, fp, fn};
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : (fn == 0 ? 1.0 : 0.0);
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : (fp == 0 ? 1.0 : 0.0);
  r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

F1Result event_f1(std::span<const double> pred, std::span<const double> ref, double tol) {
  // On a line with a symmetric window, matching each reference (in time
  // order) to the earliest still-unmatched prediction within reach yields a
  // maximum matching.
  const double reach = tol + 1e-9;
  std::size_t tp = 0, j = 0;
  for (double r : ref) {
    while (j < pred.size() && pred[j] < r - reach) ++j;
    if (j < pred.size() && pred[j] <= r + reach) {
      ++tp;
      ++j;
    }
  }
  return make_f1(tp, pred.size() - tp, ref.size() - tp);
}

DynamicsF1 dynamics_macro_f1(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref) {
  if (pred.size() != ref.size()) {
    throw InputError("dynamics_macro_f1: " + std::to_string(pred.size()) + " predictions for " +
                     std::to_string(ref.size()) + " reference beats");
  }
  std::array<std::size_t, 6> tp{}, fp{}, fn{};
  std::array<bool, 6> in_ref{}, in_pred{};
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i] == 0) continue;
    if (ref[i] > 5 || pred[i] > 5) throw InputError("dynamics_macro_f1: label outside the 6-class alphabet");
    in_ref[ref[i]] = true;
    in_pred[pred[i]] = true;
    if (pred[i] == ref[i]) {
      ++tp[ref[i]];
    } else {
      ++fn[ref[i]];
      ++fp[pred[i]];
    }
  }
  DynamicsF1 out;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 1; c <= 5; ++c) {
    if (!in_ref[c] && !in_pred[c]) continue;
    out.per_class[c - 1] = make_f1(tp[c], fp[c], fn[c]);
    if (in_ref[c]) {
      sum += out.per_class[c - 1]->f1;
      ++n;
    }
  }
  if (n > 0) out.macro = sum / static_cast<double>(n);
  return out;
}

F1Result changepoint_f1(std::span<const std::size_t> pred, std::span<const std::size_t> ref) {
  std::vector<std::size_t> p(pred.begin(), pred.end()), r(ref.begin(), ref.end());
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  std::vector<std::size_t> common;
  std::set_intersection(p.begin(), p.end(), r.begin(), r.end(), std::back_inserter(common));
  return make_f1(common.size(), p.size() - common.size(), r.size() - common.size());
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) return m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

nlohmann::json to_json(const F1Result& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"tp", r.tp},               {"fp", r.fp},         {"fn", r.fn}};
}

nlohmann::json to_json(const DynamicsF1& r) {
  static constexpr const char* kNames[5] = {"pp", "p", "mf", "f", "ff"};
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t c = 0; c < 5; ++c) {
    if (r.per_class[c]) per_class[kNames[c]] = to_json(*r.per_class[c]);
  }
  return {{"per_class", per_class}, {"macro_f1", r.macro ? nlohmann::json(*r.macro) : nlohmann::json()}};
}

}  // namespace dynamark::metrics
