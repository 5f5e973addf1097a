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
#include <map>
#include <string>
#include <vector>

#include "dynamark/tensor/parameter_store.hpp"
#include "dynamark/trainer/config.hpp"

namespace dynamark::trainer {

// Decoupled weight decay Adam with bias correction:
//   theta *= 1 - lr * wd;  m, v updated;  theta -= lr * m_hat / (sqrt(v_hat) + eps).
// Parameters that received no gradient in the last backward pass are left
// untouched, including their decay and step count.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg) : lr_(cfg.lr), beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps), wd_(cfg.weight_decay) {}

  // Throws NumericError naming the parameter when a gradient is not finite.
  void step(tensor::ParameterStore& store);

  std::size_t step_count(const std::string& name) const;

 private:
  struct State {
    std::vector<float> m;
    std::vector<float> v;
    std::size_t t = 0;
  };
  double lr_, beta1_, beta2_, eps_, wd_;
  std::map<std::string, State> state_;
};

}  // namespace dynamark::trainer
