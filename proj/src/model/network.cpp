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

#include "dynamark/model/network.hpp"

#include <cmath>
#include <random>

#include "dynamark/common/error.hpp"

namespace dynamark::model {

using tensor::Shape;

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model config: ") + name + " must be >= 1");
  };
  positive(input_bins, "input_bins");
  positive(scaling_factor, "scaling_factor");
  positive(channels, "channels");
  positive(attention_dim, "attention_dim");
  auto fixed = [](std::size_t v, std::size_t want, const char* name) {
    if (v != want) {
      throw ConfigError(std::string("model config: ") + name + " is fixed at " + std::to_string(want) +
                        ", got " + std::to_string(v));
    }
  };
  fixed(latent_dim, 8, "latent_dim");
  fixed(num_experts, 8, "num_experts");
  fixed(num_tasks, 4, "num_tasks");
  fixed(num_dynamic_classes, 6, "num_dynamic_classes");
}

void to_json(nlohmann::json& j, const ModelConfig& cfg) {
  j = nlohmann::json{{"input_bins", cfg.input_bins},
                     {"scaling_factor", cfg.scaling_factor},
                     {"channels", cfg.channels},
                     {"blocks_per_branch", cfg.blocks_per_branch},
                     {"attention_dim", cfg.attention_dim},
                     {"latent_dim", cfg.latent_dim},
                     {"num_experts", cfg.num_experts},
                     {"num_tasks", cfg.num_tasks},
                     {"num_dynamic_classes", cfg.num_dynamic_classes},
                     {"use_mmoe", cfg.use_mmoe}};
}

void from_json(const nlohmann::json& j, ModelConfig& cfg) {
  ModelConfig d;
  cfg.input_bins = j.value("input_bins", d.input_bins);
  cfg.scaling_factor = j.value("scaling_factor", d.scaling_factor);
  cfg.channels = j.value("channels", d.channels);
  cfg.blocks_per_branch = j.value("blocks_per_branch", d.blocks_per_branch);
  cfg.attention_dim = j.value("attention_dim", d.attention_dim);
  cfg.latent_dim = j.value("latent_dim", d.latent_dim);
  cfg.num_experts = j.value("num_experts", d.num_experts);
  cfg.num_tasks = j.value("num_tasks", d.num_tasks);
  cfg.num_dynamic_classes = j.value("num_dynamic_classes", d.num_dynamic_classes);
  cfg.use_mmoe = j.value("use_mmoe", d.use_mmoe);
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& cfg) {
  std::vector<std::pair<std::string, Shape>> out;
  auto dense = [&](const std::string& name, std::size_t in, std::size_t out_dim) {
    out.push_back({name + ".weight", {out_dim, in}});
    out.push_back({name + ".bias", {out_dim}});
  };
  auto norm = [&](const std::string& name, std::size_t n) {
    out.push_back({name + ".weight", {n}});
    out.push_back({name + ".bias", {n}});
  };
  const std::size_t c = cfg.channels, d = cfg.latent_dim, s = cfg.scaling_factor;
  norm("input_bn", cfg.input_bins);
  for (int b = 0; b < 3; ++b) {
    const std::string pre = "branch" + std::to_string(b);
    out.push_back({pre + ".stem.weight", {c, 1, 3, 3}});
    out.push_back({pre + ".stem.bias", {c}});
    for (std::size_t j = 0; j < cfg.blocks_per_branch; ++j) {
      const std::string blk = pre + ".block" + std::to_string(j);
      out.push_back({blk + ".conv.weight", {c, c, 3, 3}});
      out.push_back({blk + ".conv.bias", {c}});
      norm(blk + ".bn", c);
    }
    dense(pre + ".collapse", c * cfg.input_bins, c);
    dense(pre + ".attn.query", c, cfg.attention_dim);
    dense(pre + ".attn.key", c, cfg.attention_dim);
    dense(pre + ".attn.value", c, cfg.attention_dim);
    dense(pre + ".attn.out", cfg.attention_dim, c);
    norm(pre + ".attn.norm", c);
    dense(pre + ".proj", c, d);
  }
  for (const char* name : {"upsample1.0", "upsample2.0", "upsample2.1"}) {
    out.push_back({std::string(name) + ".weight", {d, d, s}});
    out.push_back({std::string(name) + ".bias", {d}});
  }
  if (cfg.use_mmoe) {
    for (std::size_t i = 0; i < cfg.num_experts; ++i) {
      const std::string pre = "mmoe.expert" + std::to_string(i);
      for (const char* conv : {".conv1", ".conv2"}) {
        out.push_back({pre + conv + ".weight", {d, d, 3}});
        out.push_back({pre + conv + ".bias", {d}});
      }
    }
    for (std::size_t k = 0; k < cfg.num_tasks; ++k) dense("mmoe.gate" + std::to_string(k), d, cfg.num_experts);
  }
  dense("head.dynamics", d, cfg.num_dynamic_classes);
  dense("head.change_point", d, 1);
  dense("head.beat", d, 1);
  dense("head.downbeat", d, 1);
  return out;
}

std::size_t param_count(const ModelConfig& cfg) {
  std::size_t n = 0;
  for (const auto& [name, shape] : parameter_shapes(cfg)) n += tensor::numel(shape);
  return n;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Network::Network(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  for (const auto& [name, shape] : parameter_shapes(cfg_)) params_.add(name, shape);
  // Initialization walks the store in name order so it depends only on the seed.
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params_) {
    auto data = t.mutable_data();
    if (t.rank() >= 2) {
      tensor::uniform_fill(data, static_cast<float>(std::sqrt(6.0 / static_cast<double>(tensor::fan_in(t.shape())))), rng);
    } else if (ends_with(name, ".weight")) {
      std::fill(data.begin(), data.end(), 1.0f);
    } else {
      std::fill(data.begin(), data.end(), 0.0f);
    }
  }
  bn_.emplace("input_bn", tensor::BatchNormState<float>(cfg_.input_bins));
  for (int b = 0; b < 3; ++b) {
    for (std::size_t j = 0; j < cfg_.blocks_per_branch; ++j) {
      bn_.emplace("branch" + std::to_string(b) + ".block" + std::to_string(j) + ".bn",
                  tensor::BatchNormState<float>(cfg_.channels));
    }
  }
}

FTensor Network::branch(std::size_t b, const FTensor& x, bool training) {
  using namespace tensor;
  const std::string pre = "branch" + std::to_string(b);
  const std::size_t batch = x.dim(0), bins = x.dim(2), len = x.dim(3);
  FTensor h = conv2d(x, p(pre + ".stem.weight"), p(pre + ".stem.bias"));
  for (std::size_t j = 0; j < cfg_.blocks_per_branch; ++j) {
    const std::string blk = pre + ".block" + std::to_string(j);
    FTensor r = relu(add(conv2d(h, p(blk + ".conv.weight"), p(blk + ".conv.bias")), h));
    h = batchnorm2d(r, p(blk + ".bn.weight"), p(blk + ".bn.bias"), bn_.at(blk + ".bn"), training);
  }
  h = reshape(permute(h, {0, 3, 1, 2}), {batch, len, cfg_.channels * bins});
  h = relu(linear(h, p(pre + ".collapse.weight"), p(pre + ".collapse.bias")));
  FTensor q = linear(h, p(pre + ".attn.query.weight"), p(pre + ".attn.query.bias"));
  FTensor k = linear(h, p(pre + ".attn.key.weight"), p(pre + ".attn.key.bias"));
  FTensor v = linear(h, p(pre + ".attn.value.weight"), p(pre + ".attn.value.bias"));
  FTensor a = linear(attention(q, k, v), p(pre + ".attn.out.weight"), p(pre + ".attn.out.bias"));
  h = layernorm(add(h, a), p(pre + ".attn.norm.weight"), p(pre + ".attn.norm.bias"));
  FTensor o = linear(h, p(pre + ".proj.weight"), p(pre + ".proj.bias"));
  return permute(o, {0, 2, 1});
}

FTensor Network::encode(const FTensor& features, bool training, std::array<std::size_t, 3>* branch_lengths) {
  using namespace tensor;
  if (!features.defined() || features.rank() != 3) {
    throw ShapeError("encode: expected features [B, F, T], got " +
                     (features.defined() ? to_string(features.shape()) : std::string("<undefined>")));
  }
  const std::size_t batch = features.dim(0), bins = features.dim(1), frames = features.dim(2);
  if (bins != cfg_.input_bins) {
    throw ConfigError("encode: model expects " + std::to_string(cfg_.input_bins) + " feature bins, got " +
                      std::to_string(bins));
  }
  if (frames == 0) throw EmptyInputError("encode: zero frames");
  const std::size_t s = cfg_.scaling_factor;
  const std::size_t multiple = s * s;
  const std::size_t padded = (frames + multiple - 1) / multiple * multiple;
  FTensor x = padded > frames ? pad_right(features, 2, padded - frames) : features;

  x = reshape(x, {batch, bins, 1, padded});
  x = batchnorm2d(x, p("input_bn.weight"), p("input_bn.bias"), bn_.at("input_bn"), training);
  x = reshape(x, {batch, 1, bins, padded});

  std::array<FTensor, 3> outs;
  FTensor level = x;
  for (std::size_t b = 0; b < 3; ++b) {
    if (b > 0 && s > 1) {
      level = maxpool1d(level, s);
      ++pooling_ops_;
    }
    outs[b] = branch(b, level, training);
    if (branch_lengths != nullptr) (*branch_lengths)[b] = outs[b].dim(2);
  }
  FTensor up1 = conv_transpose1d(outs[1], p("upsample1.0.weight"), p("upsample1.0.bias"), s);
  FTensor up2 = conv_transpose1d(outs[2], p("upsample2.0.weight"), p("upsample2.0.bias"), s);
  up2 = conv_transpose1d(up2, p("upsample2.1.weight"), p("upsample2.1.bias"), s);
  FTensor fused = add(add(outs[0], up1), up2);
  if (padded > frames) fused = slice(fused, 2, 0, frames);
  return permute(fused, {0, 2, 1});
}

MmoeOutput Network::mmoe(const FTensor& latent) {
  using namespace tensor;
  const std::size_t batch = latent.dim(0), frames = latent.dim(1), d = cfg_.latent_dim;
  const std::size_t e = cfg_.num_experts;
  FTensor channels_first = permute(latent, {0, 2, 1});
  std::vector<FTensor> parts;
  parts.reserve(e);
  for (std::size_t i = 0; i < e; ++i) {
    const std::string pre = "mmoe.expert" + std::to_string(i);
    FTensor h = relu(conv1d(channels_first, p(pre + ".conv1.weight"), p(pre + ".conv1.bias")));
    h = conv1d(h, p(pre + ".conv2.weight"), p(pre + ".conv2.bias"));
    parts.push_back(reshape(permute(h, {0, 2, 1}), {batch, frames, 1, d}));
  }
  MmoeOutput out;
  out.experts = concat<float>(parts, 2);
  for (std::size_t k = 0; k < cfg_.num_tasks; ++k) {
    const std::string pre = "mmoe.gate" + std::to_string(k);
    FTensor w = softmax(linear(latent, p(pre + ".weight"), p(pre + ".bias")));
    FTensor y = matmul(reshape(w, {batch, frames, 1, e}), out.experts);
    out.gates.push_back(w);
    out.task_features.push_back(reshape(y, {batch, frames, d}));
  }
  return out;
}

TaskLogits Network::heads(const std::vector<FTensor>& f) {
  using namespace tensor;
  const std::size_t batch = f[0].dim(0), frames = f[0].dim(1);
  auto binary = [&](const FTensor& x, const std::string& name) {
    return reshape(linear(x, p(name + ".weight"), p(name + ".bias")), {batch, frames});
  };
  TaskLogits out;
  out.dynamics = linear(f[kDynamics], p("head.dynamics.weight"), p("head.dynamics.bias"));
  out.change_point = binary(f[kChangePoint], "head.change_point");
  out.beat = binary(f[kBeat], "head.beat");
  out.downbeat = binary(f[kDownbeat], "head.downbeat");
  return out;
}

ForwardResult Network::forward(const FTensor& features, bool training) {
  ForwardResult r;
  r.latent = encode(features, training, &r.branch_lengths);
  if (cfg_.use_mmoe) {
    r.mmoe = mmoe(r.latent);
    r.logits = heads(r.mmoe.task_features);
  } else {
    r.logits = heads(std::vector<FTensor>(cfg_.num_tasks, r.latent));
  }
  return r;
}

}  // namespace dynamark::model
