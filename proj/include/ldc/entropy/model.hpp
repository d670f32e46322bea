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

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/math.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/entropy/gaussian.hpp"
#include "ldc/entropy/range_coder.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/nn/module.hpp"
#include "ldc/quantization.hpp"

namespace ldc::entropy {

struct EntropyModelConfig {
  int latent_channels = 4;
  int hyper_channels = 8;
  int width = 48;
  int symbol_bound = kDefaultSymbolBound;
  bool context_model = false;  // channel-autoregressive refinement
  uint64_t seed = 0x5EED0004ULL;
};

// Mean-scale hyperprior: a small hyper-latent is coded first under a learned
// per-channel Gaussian prior, then decoded into per-element (mu, sigma) for
// the main symbols. Optionally a channel-autoregressive context conv refines
// (mu, log sigma) for channel c from the already-decoded channels < c.
//
// sigma is parameterized as sigma_min + exp(raw), so the lower bound holds
// structurally and gradients never die at the floor.
class EntropyModel : public nn::Module {
 public:
  explicit EntropyModel(const EntropyModelConfig& cfg = {}) : cfg_(cfg) {
    Rng rng(cfg.seed);
    const int c = cfg.latent_channels, n = cfg.width, ch = cfg.hyper_channels;
    he_[0] = {conv_weight("he0.w", n, c, 3, rng), conv_bias("he0.b", n)};
    he_[1] = {conv_weight("he1.w", n, n, 3, rng), conv_bias("he1.b", n)};
    he_[2] = {conv_weight("he2.w", ch, n, 3, rng), conv_bias("he2.b", ch)};
    hd_[0] = {conv_weight("hd0.w", n, ch, 3, rng), conv_bias("hd0.b", n)};
    hd_[1] = {conv_weight("hd1.w", n, n, 3, rng), conv_bias("hd1.b", n)};
    hd_[2] = {conv_weight("hd2.w", 2 * c, n, 3, rng), conv_bias("hd2.b", 2 * c)};
    // Wide initial scales keep early-training likelihoods off the floor.
    for (int i = 0; i < c; ++i) hd_[2].b->value[c + i] = 2.0;
    prior_mu_ = add_variable("prior.mu", Tensor({ch}));
    Tensor pls({ch});
    pls.fill(2.0);
    prior_log_sigma_ = add_variable("prior.log_sigma", std::move(pls));
    if (cfg.context_model) {
      for (int i = 0; i < c; ++i) {
        ctx_.push_back({conv_weight("ctx" + std::to_string(i) + ".w", 2, c, 3, rng, 0.1),
                        conv_bias("ctx" + std::to_string(i) + ".b", 2)});
      }
    }
  }

  const EntropyModelConfig& config() const { return cfg_; }

  static std::pair<int, int> hyper_dims(int h, int w) {
    auto half = [](int v) { return (v + 1) / 2; };
    return {half(half(h)), half(half(w))};
  }

  nn::Node* hyper_encode_graph(nn::Tape& t, nn::Node* z) {
    nn::Node* x = nn::silu(t, nn::conv2d(t, z, t.param(*he_[0].w), t.param(*he_[0].b), 1, 1));
    x = nn::silu(t, nn::conv2d(t, x, t.param(*he_[1].w), t.param(*he_[1].b), 2, 1));
    return nn::conv2d(t, x, t.param(*he_[2].w), t.param(*he_[2].b), 2, 1);
  }

  // Raw head output [2C, h, w]: channels [0,C) are mu, [C,2C) are raw log
  // sigma (pre sigma_min + exp).
  nn::Node* hyper_decode_graph(nn::Tape& t, nn::Node* h, int out_h, int out_w) {
    nn::Node* x = nn::silu(t, nn::conv2d(t, h, t.param(*hd_[0].w), t.param(*hd_[0].b), 1, 1));
    x = nn::upsample2x(t, x);
    x = nn::silu(t, nn::conv2d(t, x, t.param(*hd_[1].w), t.param(*hd_[1].b), 1, 1));
    x = nn::upsample2x(t, x);
    x = nn::conv2d(t, x, t.param(*hd_[2].w), t.param(*hd_[2].b), 1, 1);
    return nn::crop2d(t, x, out_h, out_w);
  }

  // (mu, sigma) [1,h,w] for main channel c, given the raw hyper-decoder
  // output and the (partially known) main tensor for context.
  std::pair<nn::Node*, nn::Node*> channel_params_graph(nn::Tape& t, nn::Node* raw,
                                                       nn::Node* main_masked, int c) {
    const int ch = cfg_.latent_channels;
    nn::Node* mu = nn::slice0(t, raw, c, 1);
    nn::Node* ls = nn::slice0(t, raw, ch + c, 1);
    if (cfg_.context_model && c > 0) {
      require(main_masked != nullptr, ErrorKind::kInternal, "context model needs masked main");
      nn::Node* ref = nn::conv2d(t, main_masked, t.param(*ctx_[static_cast<size_t>(c)].w),
                                 t.param(*ctx_[static_cast<size_t>(c)].b), 1, 1);
      mu = nn::add(t, mu, nn::slice0(t, ref, 0, 1));
      ls = nn::add(t, ls, nn::slice0(t, ref, 1, 1));
    }
    nn::Node* sigma = nn::add_scalar(t, nn::exp_op(t, ls), kSigmaMin);
    return {mu, sigma};
  }

  std::pair<nn::Node*, nn::Node*> prior_params_graph(nn::Tape& t) {
    nn::Node* mu = t.param(*prior_mu_);
    nn::Node* sigma = nn::add_scalar(t, nn::exp_op(t, t.param(*prior_log_sigma_)), kSigmaMin);
    return {mu, sigma};
  }

  // -log2 interval mass of values under (mu, sigma), summed. Continuous
  // (unfolded) version used for training rates.
  static nn::Node* interval_bits_graph(nn::Tape& t, nn::Node* values, nn::Node* mu,
                                       nn::Node* sigma) {
    nn::Node* centered = nn::sub(t, values, mu);
    nn::Node* hi = nn::normal_cdf_op(t, nn::div(t, nn::add_scalar(t, centered, 0.5), sigma));
    nn::Node* lo = nn::normal_cdf_op(t, nn::div(t, nn::add_scalar(t, centered, -0.5), sigma));
    nn::Node* p = nn::add_scalar(t, nn::sub(t, hi, lo), 1e-12);
    return nn::mul_scalar(t, nn::sum_all(t, nn::log_op(t, p)), -1.0 / std::log(2.0));
  }

  struct RateBits {
    nn::Node* total;
    nn::Node* main;
    nn::Node* hyper;
  };

  // Training rate: hyper-latent gets additive-noise relaxation (hyper_noise,
  // shape of the hyper latent), the main symbols are whatever relaxation the
  // caller chose (z_tilde in the transformed/symbol domain).
  RateBits rate_bits_graph(nn::Tape& t, nn::Node* z_tilde, const Tensor& hyper_noise) {
    const int h = z_tilde->value.dim(1), w = z_tilde->value.dim(2);
    nn::Node* hy = hyper_encode_graph(t, z_tilde);
    require(hy->value.same_shape(hyper_noise), ErrorKind::kInternal,
            "hyper noise shape ", hyper_noise.shape_str(), " vs ", hy->value.shape_str());
    nn::Node* hy_tilde = nn::add(t, hy, t.constant(hyper_noise.clone()));
    auto [pmu, psigma] = prior_params_graph(t);
    nn::Node* hyper_bits = interval_bits_graph(t, hy_tilde, pmu, psigma);
    nn::Node* raw = hyper_decode_graph(t, hy_tilde, h, w);
    nn::Node* main_bits = nullptr;
    const int c = cfg_.latent_channels;
    for (int ci = 0; ci < c; ++ci) {
      nn::Node* masked = nullptr;
      if (cfg_.context_model && ci > 0) masked = mask_above(t, z_tilde, ci);
      auto [mu, sigma] = channel_params_graph(t, raw, masked, ci);
      nn::Node* zc = nn::slice0(t, z_tilde, ci, 1);
      nn::Node* bits = interval_bits_graph(t, zc, mu, sigma);
      main_bits = main_bits ? nn::add(t, main_bits, bits) : bits;
    }
    return {nn::add(t, main_bits, hyper_bits), main_bits, hyper_bits};
  }

  struct Compressed {
    std::vector<uint8_t> hyper;
    std::vector<uint8_t> main;
    double bit_estimate = 0;   // -log2 P of (main + hyper) under the model
    double bit_estimate_main = 0;
    double bit_estimate_hyper = 0;
    int64_t hyper_clamped = 0;
  };

  // Inference-side compression of hard symbols. The hyper-latent is rounded,
  // clamped to the alphabet, coded under the factorized prior, and then the
  // main symbols are coded under per-element (mu, sigma), channel by channel.
  Compressed compress(const QuantizedLatent& z) {
    require(z.channels() == cfg_.latent_channels, ErrorKind::kValidation,
            "entropy model channels mismatch");
    require(z.bound == cfg_.symbol_bound, ErrorKind::kValidation, "symbol bound mismatch");
    const int h = z.shape[1], w = z.shape[2];
    Tensor z_real = symbols_to_tensor(z);
    Compressed out;

    // Hyper path.
    Tensor hy;
    {
      nn::Tape t;
      hy = hyper_encode_graph(t, t.constant(z_real))->value;
    }
    const int64_t hn = hy.numel();
    std::vector<int32_t> hsym(static_cast<size_t>(hn));
    const int bound = cfg_.symbol_bound;
    for (int64_t i = 0; i < hn; ++i) {
      double v = round_half_away(hy[i]);
      if (v > bound) {
        v = bound;
        ++out.hyper_clamped;
      } else if (v < -bound) {
        v = -bound;
        ++out.hyper_clamped;
      }
      hsym[static_cast<size_t>(i)] = static_cast<int32_t>(v);
    }
    {
      RangeEncoder enc;
      const int64_t hw_h = hn / cfg_.hyper_channels;
      for (int c = 0; c < cfg_.hyper_channels; ++c) {
        auto cdf = prior_cdf(c);
        double mu = prior_mu_->value[c];
        double sigma = kSigmaMin + std::exp(prior_log_sigma_->value[c]);
        for (int64_t i = 0; i < hw_h; ++i) {
          int s = hsym[static_cast<size_t>(c * hw_h + i)];
          enc.encode(s + bound, cdf);
          out.bit_estimate_hyper += -std::log2(likelihood(s, mu, sigma, bound));
        }
      }
      out.hyper = enc.finish();
    }

    // Main path, conditioned on the decoded hyper symbols.
    Tensor hhat = hyper_symbols_to_tensor(hsym, hy.shape());
    Tensor raw = decode_raw(hhat, h, w);
    {
      RangeEncoder enc;
      std::vector<int32_t> symbols = z.symbols;
      code_main(z.shape, symbols, raw, &enc, nullptr, &out.bit_estimate_main);
      out.main = enc.finish();
    }
    out.bit_estimate = out.bit_estimate_main + out.bit_estimate_hyper;
    return out;
  }

  QuantizedLatent decompress(const std::vector<uint8_t>& hyper_bytes,
                             const std::vector<uint8_t>& main_bytes, std::vector<int> shape) {
    require(shape.size() == 3 && shape[0] == cfg_.latent_channels, ErrorKind::kFormat,
            "bad latent shape in stream");
    const int h = shape[1], w = shape[2];
    auto [hh, hw] = hyper_dims(h, w);
    const int64_t hn = static_cast<int64_t>(cfg_.hyper_channels) * hh * hw;
    const int bound = cfg_.symbol_bound;

    std::vector<int32_t> hsym(static_cast<size_t>(hn));
    {
      RangeDecoder dec(hyper_bytes);
      const int64_t hw_h = hn / cfg_.hyper_channels;
      for (int c = 0; c < cfg_.hyper_channels; ++c) {
        auto cdf = prior_cdf(c);
        for (int64_t i = 0; i < hw_h; ++i)
          hsym[static_cast<size_t>(c * hw_h + i)] = dec.decode(cdf) - bound;
      }
      dec.check_consumed();
    }
    Tensor hhat = hyper_symbols_to_tensor(hsym, {cfg_.hyper_channels, hh, hw});
    Tensor raw = decode_raw(hhat, h, w);

    QuantizedLatent z;
    z.shape = shape;
    z.bound = bound;
    z.symbols.assign(static_cast<size_t>(cfg_.latent_channels) * h * w, 0);
    RangeDecoder dec(main_bytes);
    code_main(z.shape, z.symbols, raw, nullptr, &dec, nullptr);
    dec.check_consumed();
    return z;
  }

 private:
  struct ConvPair {
    nn::Variable* w;
    nn::Variable* b;
  };

  static nn::Node* mask_above(nn::Tape& t, nn::Node* z, int c) {
    Tensor mask(z->value.shape());
    const int64_t hw = static_cast<int64_t>(z->value.dim(1)) * z->value.dim(2);
    for (int ci = 0; ci < c; ++ci)
      for (int64_t i = 0; i < hw; ++i) mask[ci * hw + i] = 1.0;
    return nn::mul(t, z, t.constant(std::move(mask)));
  }

  Tensor symbols_to_tensor(const QuantizedLatent& z) const {
    Tensor out(z.shape);
    for (int64_t i = 0; i < out.numel(); ++i)
      out[i] = static_cast<double>(z.symbols[static_cast<size_t>(i)]);
    return out;
  }

  Tensor hyper_symbols_to_tensor(const std::vector<int32_t>& sym, std::vector<int> shape) const {
    Tensor out(std::move(shape));
    for (int64_t i = 0; i < out.numel(); ++i)
      out[i] = static_cast<double>(sym[static_cast<size_t>(i)]);
    return out;
  }

  Tensor decode_raw(const Tensor& hhat, int h, int w) {
    nn::Tape t;
    return hyper_decode_graph(t, t.constant(hhat), h, w)->value;
  }

  std::vector<uint32_t> prior_cdf(int channel) {
    double mu = prior_mu_->value[channel];
    double sigma = kSigmaMin + std::exp(prior_log_sigma_->value[channel]);
    return quantize_cdf(folded_pmf(mu, sigma, cfg_.symbol_bound));
  }

  // Shared main-symbol coding loop: encodes `symbols` into `enc`, or decodes
  // from `dec` into `symbols`. Runs channel by channel so the context
  // refinement sees exactly the symbols the decoder will have.
  void code_main(const std::vector<int>& shape, std::vector<int32_t>& symbols, const Tensor& raw,
                 RangeEncoder* enc, RangeDecoder* dec, double* bit_estimate) {
    const int c = cfg_.latent_channels, h = shape[1], w = shape[2];
    const int64_t hw = static_cast<int64_t>(h) * w;
    const int bound = cfg_.symbol_bound;
    Tensor decoded({c, h, w});
    for (int ci = 0; ci < c; ++ci) {
      Tensor mu_map, sigma_map;
      {
        nn::Tape t;
        nn::Node* masked = nullptr;
        if (cfg_.context_model && ci > 0) masked = mask_above(t, t.constant(decoded), ci);
        auto [mu, sigma] = channel_params_graph(t, t.constant(raw), masked, ci);
        mu_map = mu->value;
        sigma_map = sigma->value;
      }
      for (int64_t i = 0; i < hw; ++i) {
        const double mu = mu_map[i];
        const double sigma = sigma_map[i];
        auto cdf = quantize_cdf(folded_pmf(mu, sigma, bound));
        int64_t idx = ci * hw + i;
        if (enc) {
          int s = symbols[static_cast<size_t>(idx)];
          enc->encode(s + bound, cdf);
          if (bit_estimate) *bit_estimate += -std::log2(likelihood(s, mu, sigma, bound));
          decoded[idx] = static_cast<double>(s);
        } else {
          int s = dec->decode(cdf) - bound;
          symbols[static_cast<size_t>(idx)] = static_cast<int32_t>(s);
          decoded[idx] = static_cast<double>(s);
        }
      }
    }
  }

  EntropyModelConfig cfg_;
  ConvPair he_[3];
  ConvPair hd_[3];
  nn::Variable* prior_mu_;
  nn::Variable* prior_log_sigma_;
  std::vector<ConvPair> ctx_;
};

}  // namespace ldc::entropy
