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
#include <cstdint>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/math.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/nn/graph.hpp"

namespace ldc {

// Per-channel affine transform parameters (the transmitted side information
// gamma). Stored as float32 — the serialized precision — so encoder and
// decoder apply bit-identical transforms.
struct QuantParams {
  std::vector<float> log_scale;
  std::vector<float> offset;

  int channels() const { return static_cast<int>(log_scale.size()); }
  double scale(int c) const { return std::exp(static_cast<double>(log_scale[static_cast<size_t>(c)])); }
  double shift(int c) const { return static_cast<double>(offset[static_cast<size_t>(c)]); }

  static QuantParams identity(int channels) {
    QuantParams p;
    p.log_scale.assign(static_cast<size_t>(channels), 0.0f);
    p.offset.assign(static_cast<size_t>(channels), 0.0f);
    return p;
  }
};

// Default symbol bound: symbols live in [-255, 255], a 511-letter alphabet.
inline constexpr int kDefaultSymbolBound = 255;

struct QuantizedLatent {
  std::vector<int32_t> symbols;
  std::vector<int> shape;  // [C, h, w]
  int bound = kDefaultSymbolBound;
  int64_t clamped = 0;  // saturation events during quantization

  int channels() const { return shape[0]; }
  int64_t plane_size() const { return static_cast<int64_t>(shape[1]) * shape[2]; }
  int64_t count() const { return static_cast<int64_t>(symbols.size()); }
};

// z_c = clamp(round(exp(s_c) * y_c + b_c), -K, K), round half away from zero.
inline QuantizedLatent quantize(const Tensor& y, const QuantParams& params,
                                int bound = kDefaultSymbolBound) {
  require(y.ndim() == 3 && y.dim(0) == params.channels(), ErrorKind::kValidation,
          "quantize: latent ", y.shape_str(), " vs ", params.channels(), " channel params");
  require(y.all_finite(), ErrorKind::kValidation, "quantize: non-finite latent");
  QuantizedLatent q;
  q.shape = y.shape();
  q.bound = bound;
  q.symbols.resize(static_cast<size_t>(y.numel()));
  const int64_t hw = q.plane_size();
  for (int c = 0; c < q.channels(); ++c) {
    const double a = params.scale(c);
    const double b = params.shift(c);
    for (int64_t i = 0; i < hw; ++i) {
      double v = round_half_away(a * y[c * hw + i] + b);
      if (v > bound) {
        v = bound;
        ++q.clamped;
      } else if (v < -bound) {
        v = -bound;
        ++q.clamped;
      }
      q.symbols[static_cast<size_t>(c * hw + i)] = static_cast<int32_t>(v);
    }
  }
  return q;
}

// y_c = (z_c - b_c) / exp(s_c). Exact inverse of the affine transform; the
// residual rounding error is at most 0.5 / exp(s_c) per element when no
// clamping occurred.
inline Tensor dequantize(const QuantizedLatent& q, const QuantParams& params) {
  require(q.channels() == params.channels(), ErrorKind::kValidation,
          "dequantize: channel mismatch");
  Tensor y(q.shape);
  const int64_t hw = q.plane_size();
  for (int c = 0; c < q.channels(); ++c) {
    const double a = params.scale(c);
    const double b = params.shift(c);
    for (int64_t i = 0; i < hw; ++i)
      y[c * hw + i] = (static_cast<double>(q.symbols[static_cast<size_t>(c * hw + i)]) - b) / a;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Training-time relaxations (graph mode). log_scale/offset are [C] nodes.
// ---------------------------------------------------------------------------

enum class RelaxMode { kStraightThrough, kAdditiveNoise };

struct RelaxedQuant {
  nn::Node* latent;       // dequantized-domain value (feeds the decoder path)
  nn::Node* transformed;  // symbol-domain value (feeds the rate model)
};

// straight_through: forward equals dequantize(quantize(y)) bit-exactly,
// gradients treat rounding as identity. additive_noise: transformed-domain
// uniform noise in [-0.5, 0.5), i.e. latent-domain noise of 0.5/exp(s_c);
// `noise` must hold the noise draw (same shape as y).
inline RelaxedQuant quantize_relaxed(nn::Tape& t, nn::Node* y, nn::Node* log_scale,
                                     nn::Node* offset, RelaxMode mode,
                                     double bound = kDefaultSymbolBound,
                                     const Tensor* noise = nullptr) {
  nn::Node* scale = nn::exp_op(t, log_scale);
  nn::Node* v = nn::add(t, nn::mul(t, y, scale), offset);
  nn::Node* z = nullptr;
  switch (mode) {
    case RelaxMode::kStraightThrough:
      z = nn::round_ste(t, v, bound);
      break;
    case RelaxMode::kAdditiveNoise: {
      require(noise != nullptr && noise->same_shape(y->value), ErrorKind::kValidation,
              "quantize_relaxed: additive_noise mode needs a noise tensor");
      z = nn::add(t, v, t.constant(noise->clone()));
      break;
    }
    default:
      fail(ErrorKind::kValidation, "quantize_relaxed: unknown mode");
  }
  nn::Node* latent = nn::div(t, nn::sub(t, z, offset), scale);
  return {latent, z};
}

}  // namespace ldc
