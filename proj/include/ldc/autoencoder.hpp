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

#include <array>
#include <memory>
#include <string>
#include <utility>

#include "ldc/common.hpp"
#include "ldc/core/image.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/nn/module.hpp"

namespace ldc {

// Image <-> latent transform (E_vae / D_vae). Encoding is deterministic (the
// posterior mean), so identical images always produce identical bitstreams.
class AutoencoderBackbone {
 public:
  virtual ~AutoencoderBackbone() = default;
  virtual int latent_channels() const = 0;
  virtual int downsample_factor() const = 0;
  virtual Tensor encode(const Tensor& image_chw) const = 0;
  virtual Tensor decode(const Tensor& latent) const = 0;
};

inline Tensor encode_image(const AutoencoderBackbone& vae, const ImageTensor& img) {
  const int f = vae.downsample_factor();
  require(img.height() % f == 0 && img.width() % f == 0, ErrorKind::kValidation,
          "encode_image: dimensions ", img.width(), "x", img.height(),
          " not divisible by ", f, "; pad or crop first");
  Tensor y = vae.encode(img.chw());
  require(y.ndim() == 3 && y.dim(0) == vae.latent_channels() && y.dim(1) == img.height() / f &&
              y.dim(2) == img.width() / f,
          ErrorKind::kInternal, "encoder produced unexpected latent shape ", y.shape_str());
  return y;
}

inline ImageTensor decode_latent(const AutoencoderBackbone& vae, const Tensor& latent) {
  require(latent.ndim() == 3 && latent.dim(0) == vae.latent_channels(), ErrorKind::kValidation,
          "decode_latent: bad latent shape ", latent.shape_str());
  Tensor x = vae.decode(latent);
  return ImageTensor(x).clamped();
}

struct ToyVaeConfig {
  int latent_channels = 4;
  std::array<int, 3> widths = {32, 64, 96};  // three stride-2 stages, f = 8
  uint64_t seed = 0x5EED0001ULL;
};

// Small residual VAE mirroring the foundation model's geometry (f=8, C=4) so
// the rest of the pipeline is identical under either backbone.
class ToyVae : public nn::Module, public AutoencoderBackbone {
 public:
  explicit ToyVae(const ToyVaeConfig& cfg = {}) : cfg_(cfg) {
    Rng rng(cfg.seed);
    const int c = cfg.latent_channels;
    const auto& w = cfg.widths;
    // Encoder: three residual downsampling stages, then a head producing
    // mean and logvar planes.
    enc_[0] = stage("enc0", 3, w[0], rng);
    enc_[1] = stage("enc1", w[0], w[1], rng);
    enc_[2] = stage("enc2", w[1], w[2], rng);
    enc_head_w_ = conv_weight("enc_head.w", 2 * c, w[2], 3, rng);
    enc_head_b_ = conv_bias("enc_head.b", 2 * c);
    // Decoder: entry conv, three residual upsampling stages, output conv.
    dec_in_w_ = conv_weight("dec_in.w", w[2], c, 3, rng);
    dec_in_b_ = conv_bias("dec_in.b", w[2]);
    dec_[0] = stage("dec0", w[2], w[1], rng);
    dec_[1] = stage("dec1", w[1], w[0], rng);
    dec_[2] = stage("dec2", w[0], w[0], rng);
    dec_head_w_ = conv_weight("dec_head.w", 3, w[0], 3, rng);
    dec_head_b_ = conv_bias("dec_head.b", 3);
  }

  int latent_channels() const override { return cfg_.latent_channels; }
  int downsample_factor() const override { return 8; }
  const ToyVaeConfig& config() const { return cfg_; }

  // (mean, logvar) of the latent posterior.
  std::pair<nn::Node*, nn::Node*> encode_graph(nn::Tape& t, nn::Node* x) {
    nn::Node* h = x;
    for (auto& s : enc_) h = stage_graph(t, s, h, /*down=*/true);
    nn::Node* head = nn::conv2d(t, h, t.param(*enc_head_w_), t.param(*enc_head_b_), 1, 1);
    const int c = cfg_.latent_channels;
    return {nn::slice0(t, head, 0, c), nn::slice0(t, head, c, c)};
  }

  // Unclamped image reconstruction.
  nn::Node* decode_graph(nn::Tape& t, nn::Node* y) {
    nn::Node* h = nn::silu(t, nn::conv2d(t, y, t.param(*dec_in_w_), t.param(*dec_in_b_), 1, 1));
    for (auto& s : dec_) {
      h = nn::upsample2x(t, h);
      h = stage_graph(t, s, h, /*down=*/false);
    }
    return nn::conv2d(t, h, t.param(*dec_head_w_), t.param(*dec_head_b_), 1, 1);
  }

  Tensor encode(const Tensor& image_chw) const override {
    nn::Tape t;
    auto* self = const_cast<ToyVae*>(this);
    return self->encode_graph(t, t.constant(image_chw)).first->value;
  }

  Tensor decode(const Tensor& latent) const override {
    nn::Tape t;
    auto* self = const_cast<ToyVae*>(this);
    return self->decode_graph(t, t.constant(latent))->value;
  }

 private:
  struct Stage {
    nn::Variable* w1;
    nn::Variable* b1;
    nn::Variable* w2;
    nn::Variable* b2;
    nn::Variable* skip_w;
  };

  Stage stage(const std::string& name, int cin, int cout, Rng& rng) {
    Stage s;
    s.w1 = conv_weight(name + ".w1", cout, cin, 3, rng);
    s.b1 = conv_bias(name + ".b1", cout);
    s.w2 = conv_weight(name + ".w2", cout, cout, 3, rng);
    s.b2 = conv_bias(name + ".b2", cout);
    s.skip_w = conv_weight(name + ".skip", cout, cin, 1, rng);
    return s;
  }

  nn::Node* stage_graph(nn::Tape& t, Stage& s, nn::Node* x, bool down) {
    const int stride = down ? 2 : 1;
    nn::Node* a = nn::silu(t, nn::conv2d(t, x, t.param(*s.w1), t.param(*s.b1), stride, 1));
    a = nn::conv2d(t, a, t.param(*s.w2), t.param(*s.b2), 1, 1);
    nn::Node* skip = nn::conv2d(t, x, t.param(*s.skip_w), nullptr, stride, 0);
    return nn::silu(t, nn::add(t, a, skip));
  }

  ToyVaeConfig cfg_;
  std::array<Stage, 3> enc_;
  nn::Variable* enc_head_w_;
  nn::Variable* enc_head_b_;
  nn::Variable* dec_in_w_;
  nn::Variable* dec_in_b_;
  std::array<Stage, 3> dec_;
  nn::Variable* dec_head_w_;
  nn::Variable* dec_head_b_;
};

}  // namespace ldc
