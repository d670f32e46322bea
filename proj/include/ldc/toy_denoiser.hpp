// Copyright 2026 The LDC Codec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "ldc/core/rng.hpp"
#include "ldc/diffusion.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/nn/module.hpp"
#include "ldc/schedule.hpp"

namespace ldc {

struct ToyDenoiserConfig {
  int latent_channels = 4;
  int width = 48;
  int blocks = 3;
  int time_embed_dim = 64;
  uint64_t seed = 0x5EED0002ULL;
};

// Small residual noise predictor over the latent. Timestep conditioning is a
// sinusoidal embedding mapped to a per-channel scale/shift in each block; the
// embedding is continuous in t, so training can differentiate through the
// predicted timestep. The output conv starts at zero, which makes the
// untrained predictor the identity-preserving eps = 0.
class ToyDenoiser : public nn::Module, public DenoiserBackbone {
 public:
  explicit ToyDenoiser(NoiseSchedule schedule, const ToyDenoiserConfig& cfg = {})
      : cfg_(cfg), schedule_(std::move(schedule)) {
    Rng rng(cfg.seed);
    const int c = cfg.latent_channels, w = cfg.width, d = cfg.time_embed_dim;
    temb_w_ = linear_weight("temb.w", d, d, rng);
    temb_b_ = add_variable("temb.b", Tensor({d}));
    in_w_ = conv_weight("in.w", w, c, 3, rng);
    in_b_ = conv_bias("in.b", w);
    blocks_.reserve(static_cast<size_t>(cfg.blocks));
    for (int i = 0; i < cfg.blocks; ++i) {
      std::string p = "block" + std::to_string(i);
      Block b;
      b.film_w = linear_weight(p + ".film.w", 2 * w, d, rng, 0.5);
      b.film_b = add_variable(p + ".film.b", Tensor({2 * w}));
      b.w1 = conv_weight(p + ".w1", w, w, 3, rng);
      b.b1 = conv_bias(p + ".b1", w);
      b.w2 = conv_weight(p + ".w2", w, w, 3, rng);
      b.b2 = conv_bias(p + ".b2", w);
      blocks_.push_back(b);
    }
    out_w_ = add_variable("out.w", Tensor({c, w, 3, 3}));  // zero init
    out_b_ = conv_bias("out.b", c);
  }

  int latent_channels() const override { return cfg_.latent_channels; }
  const NoiseSchedule& schedule() const override { return schedule_; }
  bool differentiable() const override { return true; }
  const ToyDenoiserConfig& config() const { return cfg_; }

  nn::Node* predict_graph(nn::Tape& t, nn::Node* x, nn::Node* timestep) const override {
    auto* self = const_cast<ToyDenoiser*>(this);
    require(x->value.ndim() == 3 && x->value.dim(0) == cfg_.latent_channels,
            ErrorKind::kValidation, "denoiser input shape ", x->value.shape_str());
    nn::Node* emb = nn::timestep_embedding(t, timestep, cfg_.time_embed_dim);
    emb = nn::silu(t, nn::linear(t, t.param(*self->temb_w_), emb, t.param(*self->temb_b_)));
    nn::Node* h = nn::silu(t, nn::conv2d(t, x, t.param(*self->in_w_), t.param(*self->in_b_), 1, 1));
    const int w = cfg_.width;
    for (auto& blk : self->blocks_) {
      nn::Node* film = nn::linear(t, t.param(*blk.film_w), emb, t.param(*blk.film_b));
      nn::Node* scale = nn::add_scalar(t, nn::slice0(t, film, 0, w), 1.0);
      nn::Node* shift = nn::slice0(t, film, w, w);
      nn::Node* a = nn::silu(t, nn::conv2d(t, h, t.param(*blk.w1), t.param(*blk.b1), 1, 1));
      a = nn::add(t, nn::mul(t, a, scale), shift);
      a = nn::conv2d(t, nn::silu(t, a), t.param(*blk.w2), t.param(*blk.b2), 1, 1);
      h = nn::add(t, h, a);
    }
    return nn::conv2d(t, h, t.param(*self->out_w_), t.param(*self->out_b_), 1, 1);
  }

  Tensor predict(const Tensor& latent, double timestep) const override {
    nn::Tape t;
    nn::Node* x = t.constant(latent);
    nn::Node* ts = t.constant_scalar(timestep);
    return predict_graph(t, x, ts)->value;
  }

 private:
  struct Block {
    nn::Variable* film_w;
    nn::Variable* film_b;
    nn::Variable* w1;
    nn::Variable* b1;
    nn::Variable* w2;
    nn::Variable* b2;
  };

  ToyDenoiserConfig cfg_;
  NoiseSchedule schedule_;
  nn::Variable* temb_w_;
  nn::Variable* temb_b_;
  nn::Variable* in_w_;
  nn::Variable* in_b_;
  std::vector<Block> blocks_;
  nn::Variable* out_w_;
  nn::Variable* out_b_;
};

}  // namespace ldc
