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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ldc/core/rng.hpp"
#include "ldc/quantization.hpp"

using namespace ldc;

namespace {

Tensor random_latent(std::vector<int> shape, Rng& rng, double scale = 2.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

QuantParams random_params(int c, Rng& rng) {
  QuantParams p;
  for (int i = 0; i < c; ++i) {
    p.log_scale.push_back(static_cast<float>(rng.uniform(-0.5, 1.8)));
    p.offset.push_back(static_cast<float>(rng.uniform(-0.4, 0.4)));
  }
  return p;
}

}  // namespace

TEST_CASE("quantize identity transform rounds", "[quantization]") {
  Rng rng(1);
  Tensor y = random_latent({2, 3, 3}, rng);
  QuantParams id = QuantParams::identity(2);
  QuantizedLatent q = quantize(y, id);
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(q.symbols[static_cast<size_t>(i)] == static_cast<int32_t>(round_half_away(y[i])));
  CHECK(q.clamped == 0);
}

TEST_CASE("quantize arithmetic example", "[quantization]") {
  // y = 0.7, a = 4, b = 0 -> round(2.8) = 3; dequantize(3) = 0.75.
  Tensor y({1, 1, 1});
  y[0] = 0.7;
  QuantParams p;
  p.log_scale = {static_cast<float>(std::log(4.0))};
  p.offset = {0.0f};
  QuantizedLatent q = quantize(y, p);
  CHECK(q.symbols[0] == 3);
  Tensor back = dequantize(q, p);
  CHECK(back[0] == Catch::Approx(0.75).margin(1e-7));
}

TEST_CASE("round-trip error bounded by 0.5/a per element", "[quantization]") {
  Rng rng(2);
  Tensor y = random_latent({4, 16, 16}, rng);
  QuantParams p = random_params(4, rng);
  QuantizedLatent q = quantize(y, p);
  REQUIRE(q.clamped == 0);
  Tensor back = dequantize(q, p);
  const int64_t hw = q.plane_size();
  for (int c = 0; c < 4; ++c) {
    double bound = 0.5 / p.scale(c) + 1e-12;
    for (int64_t i = 0; i < hw; ++i)
      CHECK(std::abs(back[c * hw + i] - y[c * hw + i]) <= bound);
  }
}

TEST_CASE("affine inverse without rounding", "[quantization]") {
  Rng rng(3);
  QuantParams p = random_params(3, rng);
  Tensor y = random_latent({3, 5, 5}, rng);
  // T^{-1}(T(y)) without the round: apply transform, wrap as symbols via a
  // direct copy, invert.
  const int64_t hw = 25;
  Tensor transformed({3, 5, 5});
  for (int c = 0; c < 3; ++c)
    for (int64_t i = 0; i < hw; ++i)
      transformed[c * hw + i] = p.scale(c) * y[c * hw + i] + p.shift(c);
  Tensor inverted({3, 5, 5});
  for (int c = 0; c < 3; ++c)
    for (int64_t i = 0; i < hw; ++i)
      inverted[c * hw + i] = (transformed[c * hw + i] - p.shift(c)) / p.scale(c);
  CHECK(max_abs_diff(inverted, y) < 1e-6);
}

TEST_CASE("larger scale gives smaller round-trip bound", "[quantization]") {
  Rng rng(4);
  Tensor y = random_latent({1, 32, 32}, rng, 1.0);
  double prev_worst = 1e9;
  for (double a : {1.0, 2.0, 4.0, 8.0}) {
    QuantParams p;
    p.log_scale = {static_cast<float>(std::log(a))};
    p.offset = {0.0f};
    QuantizedLatent q = quantize(y, p);
    Tensor back = dequantize(q, p);
    double bound = 0.5 / a;
    double worst = max_abs_diff(back, y);
    CHECK(worst <= bound + 1e-12);
    CHECK(bound < prev_worst);
    prev_worst = bound;
  }
}

TEST_CASE("saturation is clamped and counted", "[quantization]") {
  Tensor y({1, 1, 3});
  y[0] = 1000.0;
  y[1] = -1000.0;
  y[2] = 0.25;
  QuantParams p = QuantParams::identity(1);
  QuantizedLatent q = quantize(y, p, 255);
  CHECK(q.symbols[0] == 255);
  CHECK(q.symbols[1] == -255);
  CHECK(q.symbols[2] == 0);
  CHECK(q.clamped == 2);
}

TEST_CASE("straight-through forward equals the hard path bit-exactly", "[quantization]") {
  Rng rng(5);
  Tensor y = random_latent({4, 8, 8}, rng);
  QuantParams p = random_params(4, rng);
  QuantizedLatent hard = quantize(y, p);
  Tensor hard_latent = dequantize(hard, p);

  nn::Tape t;
  nn::Node* yn = t.constant(y);
  Tensor ls({4}), off({4});
  for (int c = 0; c < 4; ++c) {
    ls[c] = static_cast<double>(p.log_scale[static_cast<size_t>(c)]);
    off[c] = static_cast<double>(p.offset[static_cast<size_t>(c)]);
  }
  RelaxedQuant r = quantize_relaxed(t, yn, t.constant(ls), t.constant(off),
                                    RelaxMode::kStraightThrough);
  CHECK(max_abs_diff(r.latent->value, hard_latent) == 0.0);
  // Symbol proxy matches the integer symbols.
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(r.transformed->value[i] == static_cast<double>(hard.symbols[static_cast<size_t>(i)]));
}

TEST_CASE("additive noise stays within 0.5/a of the input", "[quantization]") {
  Rng rng(6);
  Tensor y = random_latent({2, 6, 6}, rng);
  Tensor ls({2}), off({2});
  ls[0] = std::log(2.0);
  ls[1] = std::log(5.0);
  off[0] = 0.1;
  off[1] = -0.2;
  Tensor noise(y.shape());
  for (int64_t i = 0; i < noise.numel(); ++i) noise[i] = rng.uniform(-0.5, 0.5);
  nn::Tape t;
  RelaxedQuant r = quantize_relaxed(t, t.constant(y), t.constant(ls), t.constant(off),
                                    RelaxMode::kAdditiveNoise, kDefaultSymbolBound, &noise);
  const int64_t hw = 36;
  for (int c = 0; c < 2; ++c) {
    double bound = 0.5 / std::exp(ls[c]) + 1e-12;
    for (int64_t i = 0; i < hw; ++i)
      CHECK(std::abs(r.latent->value[c * hw + i] - y[c * hw + i]) <= bound);
  }
}

TEST_CASE("straight-through gradient is identity", "[quantization]") {
  Rng rng(7);
  Tensor y = random_latent({2, 4, 4}, rng);
  nn::Tape t;
  nn::Node* yn = t.input(y.clone());
  Tensor ls = Tensor::from({2}, {std::log(3.0), std::log(1.5)});
  Tensor off = Tensor::from({2}, {0.05, -0.1});
  RelaxedQuant r = quantize_relaxed(t, yn, t.constant(ls), t.constant(off),
                                    RelaxMode::kStraightThrough);
  nn::Node* loss = nn::mean_all(t, r.latent);
  t.backward(loss);
  // d mean(dequant(quant(y)))/dy under STE: the affine and its inverse cancel,
  // leaving exactly the gradient of mean(y).
  for (int64_t i = 0; i < y.numel(); ++i)
    CHECK(yn->grad[i] == Catch::Approx(1.0 / y.numel()).margin(1e-12));
}

TEST_CASE("gradients flow to gamma through the relaxations", "[quantization]") {
  Rng rng(8);
  Tensor y = random_latent({2, 4, 4}, rng);
  Tensor noise(y.shape());
  for (int64_t i = 0; i < noise.numel(); ++i) noise[i] = rng.uniform(-0.5, 0.5);
  nn::Tape t;
  nn::Node* ls = t.input(Tensor::from({2}, {0.3, 0.9}));
  nn::Node* off = t.input(Tensor::from({2}, {0.0, 0.1}));
  RelaxedQuant r = quantize_relaxed(t, t.constant(y), ls, off, RelaxMode::kAdditiveNoise,
                                    kDefaultSymbolBound, &noise);
  // A loss that depends on the transformed symbols (rate-like term).
  nn::Node* loss = nn::sum_all(t, nn::mul(t, r.transformed, r.transformed));
  t.backward(loss);
  REQUIRE(ls->grad.defined());
  REQUIRE(off->grad.defined());
  CHECK(std::abs(ls->grad[0]) > 0);
  CHECK(std::abs(off->grad[0]) > 0);
}

TEST_CASE("quantize rejects non-finite input", "[quantization]") {
  Tensor y({1, 1, 1});
  y[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(quantize(y, QuantParams::identity(1)), Error);
}
