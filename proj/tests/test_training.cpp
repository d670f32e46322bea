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

#include "ldc/core/synthetic.hpp"
#include "ldc/training.hpp"

using namespace ldc;

namespace {

CodecConfig tiny_codec_cfg() {
  CodecConfig cfg;
  cfg.vae_widths = {4, 6, 8};
  cfg.denoiser_width = 8;
  cfg.denoiser_blocks = 1;
  cfg.denoiser_time_embed = 8;
  cfg.pphi_widths = {8, 8, 8, 8};
  cfg.entropy_width = 8;
  cfg.hyper_channels = 2;
  return cfg;
}

TrainConfig tiny_train_cfg() {
  TrainConfig cfg;
  cfg.crop = 16;
  cfg.batch_size = 2;
  cfg.threads = 2;
  cfg.vae_steps = 30;
  cfg.denoiser_steps = 30;
  cfg.steps = 30;
  cfg.learning_rate = 1e-3;
  cfg.seed = 11;
  cfg.log_every = 1000000;
  return cfg;
}

Dataset tiny_dataset(int count, int size, uint64_t seed) {
  std::vector<ImageTensor> imgs;
  for (int i = 0; i < count; ++i)
    imgs.push_back(synthetic_image(Rng::mix(seed, static_cast<uint64_t>(i)), size, size));
  return Dataset::from_images(std::move(imgs));
}

// Nudges zero-initialized heads so gradients reach every trunk weight.
void perturb_heads(CodecContext& ctx, uint64_t seed) {
  Rng rng(seed);
  for (auto* v : ctx.pphi().variables())
    if (v->name == "head.w")
      for (int64_t i = 0; i < v->value.numel(); ++i) v->value[i] = 0.02 * rng.normal();
  for (auto* v : ctx.denoiser().variables())
    if (v->name == "out.w")
      for (int64_t i = 0; i < v->value.numel(); ++i) v->value[i] = 0.02 * rng.normal();
}

}  // namespace

TEST_CASE("rd_loss two-term structure", "[training]") {
  Rng rng(1);
  Tensor x({3, 4, 4});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform();
  Tensor xh = x.clone();
  for (int64_t i = 0; i < xh.numel(); ++i) xh[i] += 0.1 * rng.normal();

  SECTION("zero distortion leaves exactly the bit estimate") {
    nn::Tape t;
    nn::Node* loss = rd_loss(t, t.constant(x), t.constant(x.clone()),
                             t.constant_scalar(123.456), 5.0);
    CHECK(loss->value[0] == 123.456);
  }

  SECTION("doubling lambda doubles the distortion term only") {
    nn::Tape t;
    double bits = 77.0;
    double l1 = rd_loss(t, t.constant(x), t.constant(xh), t.constant_scalar(bits), 4.0)->value[0];
    double l2 = rd_loss(t, t.constant(x), t.constant(xh), t.constant_scalar(bits), 8.0)->value[0];
    CHECK(l2 - bits == Catch::Approx(2.0 * (l1 - bits)).epsilon(1e-12));
  }

  SECTION("matches an independent two-term evaluation") {
    double sse_oracle = 0;
    for (int64_t i = 0; i < x.numel(); ++i) sse_oracle += (x[i] - xh[i]) * (x[i] - xh[i]);
    nn::Tape t;
    double lambda = 10.0, bits = 200.5;
    double loss = rd_loss(t, t.constant(x), t.constant(xh), t.constant_scalar(bits), lambda)->value[0];
    CHECK(loss == Catch::Approx(bits + lambda * sse_oracle).epsilon(1e-12));
  }

  SECTION("shape mismatch and non-positive lambda rejected") {
    nn::Tape t;
    CHECK_THROWS_AS(rd_loss(t, t.constant(x), t.constant(Tensor({3, 4, 5})),
                            t.constant_scalar(1.0), 1.0),
                    Error);
    CHECK_THROWS_AS(rd_loss(t, t.constant(x), t.constant(xh), t.constant_scalar(1.0), 0.0),
                    Error);
  }
}

TEST_CASE("codec train step sends gradient to every trainable parameter", "[training]") {
  CodecContext ctx(tiny_codec_cfg());
  perturb_heads(ctx, 3);
  Dataset data = tiny_dataset(8, 16, 21);
  TrainConfig cfg = tiny_train_cfg();
  cfg.steps = 1;
  cfg.batch_size = 2;

  // Run one step manually to inspect gradients after backward.
  ctx.vae().set_trainable(false);
  ctx.denoiser().set_trainable(false);
  ctx.pphi().set_trainable(true);
  ctx.entropy_model().set_trainable(true);
  ctx.pphi().zero_grads();
  ctx.entropy_model().zero_grads();
  detail::batch_backward(cfg.batch_size, cfg.threads, [&](nn::Tape& t, int i) {
    Rng rng(Rng::mix(7, static_cast<uint64_t>(i)));
    ImageTensor crop = data.random_crop(static_cast<size_t>(i), cfg.crop, rng);
    nn::Node* x = t.constant(crop.chw());
    Tensor y = ctx.vae().encode(crop.chw());
    nn::Node* yn = t.constant(y);
    auto pred = ctx.pphi().predict_graph(t, yn, 10.0);
    RelaxedQuant ste = quantize_relaxed(t, yn, pred.log_scale, pred.offset,
                                        RelaxMode::kStraightThrough);
    Tensor qnoise(y.shape());
    for (int64_t k = 0; k < qnoise.numel(); ++k) qnoise[k] = rng.uniform(-0.5, 0.5);
    RelaxedQuant noisy = quantize_relaxed(t, yn, pred.log_scale, pred.offset,
                                          RelaxMode::kAdditiveNoise, kDefaultSymbolBound, &qnoise);
    auto [hh, hw] = entropy::EntropyModel::hyper_dims(y.dim(1), y.dim(2));
    Tensor hnoise({2, hh, hw});
    for (int64_t k = 0; k < hnoise.numel(); ++k) hnoise[k] = rng.uniform(-0.5, 0.5);
    auto rate = ctx.entropy_model().rate_bits_graph(t, noisy.transformed, hnoise);
    nn::Node* y0 = one_step_decode(t, ste.latent, pred.tau, ctx.denoiser());
    nn::Node* x_hat = ctx.vae().decode_graph(t, y0);
    return rd_loss(t, x, x_hat, rate.total, 500.0);
  });

  int nonzero = 0, total = 0;
  auto audit = [&](std::vector<nn::Variable*> vars) {
    for (auto* v : vars) {
      ++total;
      double norm = 0;
      for (int64_t i = 0; i < v->grad.numel(); ++i) norm += std::abs(v->grad[i]);
      if (norm > 0) ++nonzero;
      else {
        CAPTURE(v->name);
        CHECK(norm > 0);
      }
    }
  };
  audit(ctx.pphi().variables());
  audit(ctx.entropy_model().variables());
  CHECK(nonzero == total);
}

TEST_CASE("overfit smoke: codec loss decreases", "[training]") {
  CodecContext ctx(tiny_codec_cfg());
  Dataset data = tiny_dataset(12, 16, 31);
  TrainConfig cfg = tiny_train_cfg();
  cfg.vae_steps = 120;
  cfg.denoiser_steps = 60;
  cfg.steps = 500;
  cfg.lambda_set = {10.0};

  train_vae(ctx, data, cfg);
  train_denoiser(ctx, data, cfg);
  StageReport rep = train_codec(ctx, data, cfg);
  REQUIRE(rep.steps_run == 500);
  double early = 0, late = 0;
  for (int i = 0; i < 50; ++i) early += rep.loss_curve[static_cast<size_t>(i)] / 50;
  for (int i = 450; i < 500; ++i) late += rep.loss_curve[static_cast<size_t>(i)] / 50;
  CAPTURE(early, late);
  CHECK(late < early);
}

TEST_CASE("fixed seed reproduces the loss curve bitwise", "[training]") {
  Dataset data = tiny_dataset(6, 16, 41);
  TrainConfig cfg = tiny_train_cfg();
  cfg.vae_steps = 20;
  cfg.denoiser_steps = 20;
  cfg.steps = 100;

  auto run = [&]() {
    CodecContext ctx(tiny_codec_cfg());
    train_vae(ctx, data, cfg);
    train_denoiser(ctx, data, cfg);
    StageReport rep = train_codec(ctx, data, cfg);
    return rep.loss_curve;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CAPTURE(i);
    REQUIRE(a[i] == b[i]);
  }
}

TEST_CASE("training never invokes the iterative sampler", "[training]") {
  CodecContext ctx(tiny_codec_cfg());
  Dataset data = tiny_dataset(6, 16, 51);
  TrainConfig cfg = tiny_train_cfg();
  cfg.vae_steps = 5;
  cfg.denoiser_steps = 5;
  cfg.steps = 10;
  const int64_t before = denoise_from_invocations().load();
  train_vae(ctx, data, cfg);
  train_denoiser(ctx, data, cfg);
  train_codec(ctx, data, cfg);
  CHECK(denoise_from_invocations().load() == before);
}

TEST_CASE("train config validation", "[training]") {
  Config c = Config::from_string("lambda_set = 1, -5\n");
  CHECK_THROWS_AS(TrainConfig::from_config(c), Error);
  Config c2 = Config::from_string("backbone_mode = gpu\n");
  CHECK_THROWS_AS(TrainConfig::from_config(c2), Error);
  Config c3 = Config::from_string("steps = 100\nlearning_rate = 2e-4\n");
  TrainConfig t = TrainConfig::from_config(c3);
  CHECK(t.steps == 100);
  CHECK(t.learning_rate == Catch::Approx(2e-4));
  CHECK(t.lambda_set == std::vector<double>{1, 5, 10, 20});
}
