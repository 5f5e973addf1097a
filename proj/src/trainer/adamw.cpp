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

#include "dynamark/trainer/adamw.hpp"

#include <cmath>

#include "dynamark/common/error.hpp"

namespace dynamark::trainer {

void AdamW::step(tensor::ParameterStore& store) {
  for (auto& [name, param] : store) {
    if (!param.grad_touched()) continue;
    const auto g = param.grad();
    for (float v : g) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient in parameter '" + name + "'");
    }
    auto& s = state_[name];
    if (s.m.empty()) {
      s.m.assign(param.size(), 0.0f);
      s.v.assign(param.size(), 0.0f);
    }
    ++s.t;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
    const double decay = 1.0 - lr_ * wd_;
    auto theta = param.mutable_data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g[i];
      const double m = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
      const double v = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
      s.m[i] = static_cast<float>(m);
      s.v[i] = static_cast<float>(v);
      const double update = lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
      theta[i] = static_cast<float>(static_cast<double>(theta[i]) * decay - update);
    }
  }
}

std::size_t AdamW::step_count(const std::string& name) const {
  const auto it = state_.find(name);
  return it == state_.end() ? 0 : it->second.t;
}

}  // namespace dynamark::trainer
