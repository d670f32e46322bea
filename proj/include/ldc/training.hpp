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

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ldc/codec.hpp"
#include "ldc/config.hpp"
#include "ldc/core/parallel.hpp"
#include "ldc/core/synthetic.hpp"
#include "ldc/nn/adam.hpp"

namespace ldc {

struct TrainConfig {
  int steps = 50000;           // codec stage; paper-scale runs use 300000
  int vae_steps = 3000;
  int denoiser_steps = 3000;
  double learning_rate = 1e-4;
  int crop = 256;
  std::vector<double> lambda_set = {1.0, 5.0, 10.0, 20.0};
  int batch_size = 4;
  uint64_t seed = 0;
  std::string backbone_mode = "toy";  // toy | foundation-frozen
  // Desk-scale rate/distortion balance folded into the lambda handed to
  // rd_loss; the reported lambda stays nominal.
  double distortion_scale = 50.0;
  int threads = 2;
  double kl_weight = 1e-4;
  double denoiser_max_t_frac = 0.15;  // train the backbone where the codec uses it
  double grad_clip = 5.0;            // global-norm clip; 0 disables
  int log_every = 50;

  static TrainConfig from_config(const Config& c) {
    TrainConfig t;
    t.steps = static_cast<int>(c.get_int("steps", t.steps));
    t.vae_steps = static_cast<int>(c.get_int("vae_steps", t.vae_steps));
    t.denoiser_steps = static_cast<int>(c.get_int("denoiser_steps", t.denoiser_steps));
    t.learning_rate = c.get_double("learning_rate", t.learning_rate);
    t.crop = static_cast<int>(c.get_int("crop", t.crop));
    t.lambda_set = c.get_doubles("lambda_set", t.lambda_set);
    t.batch_size = static_cast<int>(c.get_int("batch_size", t.batch_size));
    t.seed = static_cast<uint64_t>(c.get_int("seed", 0));
    t.backbone_mode = c.get_str("backbone_mode", t.backbone_mode);
    t.distortion_scale = c.get_double("distortion_scale", t.distortion_scale);
    t.threads = static_cast<int>(c.get_int("threads", t.threads));
    t.kl_weight = c.get_double("kl_weight", t.kl_weight);
    t.denoiser_max_t_frac = c.get_double("denoiser_max_t_frac", t.denoiser_max_t_frac);
    t.grad_clip = c.get_double("grad_clip", t.grad_clip);
    t.log_every = static_cast<int>(c.get_int("log_every", t.log_every));
    t.validate();
    return t;
  }

  void validate() const {
    require(!lambda_set.empty(), ErrorKind::kValidation, "lambda_set must be non-empty");
    for (double l : lambda_set)
      require(l > 0, ErrorKind::kValidation, "lambda_set entries must be positive");
    require(batch_size >= 1 && steps >= 0 && crop >= 16, ErrorKind::kValidation,
            "bad training configuration");
    require(backbone_mode == "toy" || backbone_mode == "foundation-frozen",
            ErrorKind::kValidation, "backbone_mode must be toy or foundation-frozen");
  }
};

// Line-delimited JSON metrics, one record per step.
class MetricsLog {
 public:
  MetricsLog() = default;
  explicit MetricsLog(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::app);
      require(out_.good(), ErrorKind::kIo, "cannot open metrics log: ", path);
    }
  }
  void record(const nlohmann::json& j) {
    if (out_.is_open()) out_ << j.dump() << "\n";
  }
  void flush() {
    if (out_.is_open()) out_.flush();
  }

 private:
  std::ofstream out_;
};

// In-memory image corpus with seeded random crops.
class Dataset {
 public:
  static Dataset load_dir(const std::string& dir) {
    Dataset d;
    for (const auto& path : list_images(dir)) d.images_.push_back(load_image(path));
    require(!d.images_.empty(), ErrorKind::kIo, "no images found under ", dir);
    return d;
  }

  static Dataset from_images(std::vector<ImageTensor> images) {
    Dataset d;
    d.images_ = std::move(images);
    require(!d.images_.empty(), ErrorKind::kValidation, "empty dataset");
    return d;
  }

  size_t size() const { return images_.size(); }
  const ImageTensor& image(size_t i) const { return images_[i]; }

  ImageTensor random_crop(size_t i, int crop, Rng& rng) const {
    const ImageTensor& img = images_[i];
    require(img.height() >= crop && img.width() >= crop, ErrorKind::kValidation,
            "image smaller than crop size ", crop);
    int y0 = img.height() == crop ? 0 : static_cast<int>(rng.bounded(static_cast<uint32_t>(img.height() - crop + 1)));
    int x0 = img.width() == crop ? 0 : static_cast<int>(rng.bounded(static_cast<uint32_t>(img.width() - crop + 1)));
    return crop_window(img, y0, x0, crop, crop);
  }

 private:
  std::vector<ImageTensor> images_;
};

// Rate-distortion objective: bit_estimate + lambda * ||x - x_hat||_2^2.
inline nn::Node* rd_loss(nn::Tape& t, nn::Node* x, nn::Node* x_hat, nn::Node* bit_estimate,
                         double lambda) {
  require(x->value.same_shape(x_hat->value), ErrorKind::kValidation, "rd_loss shape mismatch");
  require(lambda > 0, ErrorKind::kValidation, "rd_loss needs positive lambda");
  return nn::add(t, bit_estimate, nn::mul_scalar(t, nn::sse(t, x, x_hat), lambda));
}

namespace detail {

// Builds one tape per batch slot on a fixed worker assignment, backpropagates
// each scalar loss, and accumulates parameter gradients into Variable::grad
// in worker order (deterministic for a fixed thread count). Gradients are
// scaled by 1/batch. Returns per-slot losses; if any is non-finite the
// gradients are discarded and the step must be skipped.
inline std::vector<double> batch_backward(int batch_size, int threads,
                                          const std::function<nn::Node*(nn::Tape&, int)>& build) {
  std::vector<double> losses(static_cast<size_t>(batch_size));
  const int workers = std::max(1, std::min(threads, batch_size));
  std::vector<std::unordered_map<nn::Variable*, Tensor>> acc(static_cast<size_t>(workers));
  parallel_for(batch_size, workers, [&](int64_t i, int w) {
    nn::Tape tape;
    nn::Node* loss = build(tape, static_cast<int>(i));
    losses[static_cast<size_t>(i)] = loss->value[0];
    if (std::isfinite(loss->value[0])) {
      tape.backward(loss);
      tape.collect_param_grads(acc[static_cast<size_t>(w)]);
    }
  });
  bool finite = true;
  for (double l : losses) finite = finite && std::isfinite(l);
  if (!finite) return losses;
  const double scale = 1.0 / static_cast<double>(batch_size);
  for (auto& worker_map : acc) {
    for (auto& [var, g] : worker_map) {
      if (!var->grad.defined()) var->grad = Tensor(var->value.shape());
      for (int64_t k = 0; k < g.numel(); ++k) var->grad[k] += scale * g[k];
    }
  }
  return losses;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace detail

struct StageReport {
  int steps_run = 0;
  int steps_skipped = 0;
  double final_loss = 0;
  std::vector<double> loss_curve;  // per-step mean loss
};

// ---------------------------------------------------------------------------
// Stage 1: toy VAE (reconstruction + small KL).
// ---------------------------------------------------------------------------
inline StageReport train_vae(CodecContext& ctx, const Dataset& data, const TrainConfig& cfg,
                             MetricsLog* log = nullptr) {
  ToyVae& vae = ctx.vae();
  vae.set_trainable(true);
  nn::Adam opt(vae.variables(), cfg.learning_rate);
  StageReport report;
  for (int step = 0; step < cfg.vae_steps; ++step) {
    vae.zero_grads();
    auto losses = detail::batch_backward(cfg.batch_size, cfg.threads, [&](nn::Tape& t, int i) {
      Rng rng(Rng::mix(cfg.seed, Rng::mix(0xA1, Rng::mix(step, i))));
      ImageTensor crop = data.random_crop(rng.bounded(static_cast<uint32_t>(data.size())),
                                          cfg.crop, rng);
      nn::Node* x = t.constant(crop.chw());
      auto [mean, logvar] = vae.encode_graph(t, x);
      Tensor eps(mean->value.shape());
      for (int64_t k = 0; k < eps.numel(); ++k) eps[k] = rng.normal();
      nn::Node* std_dev = nn::exp_op(t, nn::mul_scalar(t, logvar, 0.5));
      nn::Node* z = nn::add(t, mean, nn::mul(t, std_dev, t.constant(std::move(eps))));
      nn::Node* x_hat = vae.decode_graph(t, z);
      nn::Node* recon = nn::sse(t, x, x_hat);
      // KL(q || N(0,1)) = 0.5 * sum(mu^2 + e^lv - 1 - lv)
      nn::Node* kl = nn::mul_scalar(
          t,
          nn::sum_all(t, nn::add(t, nn::mul(t, mean, mean),
                                 nn::sub(t, nn::add_scalar(t, nn::exp_op(t, logvar), -1.0), logvar))),
          0.5);
      return nn::add(t, recon, nn::mul_scalar(t, kl, cfg.kl_weight));
    });
    double mean_loss = detail::mean_of(losses);
    report.loss_curve.push_back(mean_loss);
    if (!std::isfinite(mean_loss)) {
      ++report.steps_skipped;
      if (log) log->record({{"stage", "vae"}, {"step", step}, {"skipped", true}});
      continue;
    }
    if (cfg.grad_clip > 0) opt.clip_global_norm(cfg.grad_clip);
    opt.step();
    ++report.steps_run;
    report.final_loss = mean_loss;
    if (log && step % cfg.log_every == 0)
      log->record({{"stage", "vae"}, {"step", step}, {"loss", mean_loss}});
  }
  if (log) log->flush();
  return report;
}

// ---------------------------------------------------------------------------
// Stage 2: toy denoiser (epsilon prediction on frozen-VAE latents).
// ---------------------------------------------------------------------------
inline StageReport train_denoiser(CodecContext& ctx, const Dataset& data, const TrainConfig& cfg,
                                  MetricsLog* log = nullptr) {
  ToyVae& vae = ctx.vae();
  ToyDenoiser& den = ctx.denoiser();
  vae.set_trainable(false);
  den.set_trainable(true);
  const NoiseSchedule& schedule = ctx.schedule();
  const int t_hi = std::max(1, static_cast<int>(schedule.t_max() * cfg.denoiser_max_t_frac));
  nn::Adam opt(den.variables(), cfg.learning_rate);
  StageReport report;
  for (int step = 0; step < cfg.denoiser_steps; ++step) {
    den.zero_grads();
    auto losses = detail::batch_backward(cfg.batch_size, cfg.threads, [&](nn::Tape& t, int i) {
      Rng rng(Rng::mix(cfg.seed, Rng::mix(0xA2, Rng::mix(step, i))));
      ImageTensor crop = data.random_crop(rng.bounded(static_cast<uint32_t>(data.size())),
                                          cfg.crop, rng);
      Tensor y = vae.encode(crop.chw());
      const int tstep = 1 + static_cast<int>(rng.bounded(static_cast<uint32_t>(t_hi)));
      const double sa = std::sqrt(schedule.alpha_bar(tstep));
      const double sn = std::sqrt(1.0 - schedule.alpha_bar(tstep));
      Tensor eps(y.shape());
      for (int64_t k = 0; k < eps.numel(); ++k) eps[k] = rng.normal();
      Tensor x_t(y.shape());
      for (int64_t k = 0; k < x_t.numel(); ++k) x_t[k] = sa * y[k] + sn * eps[k];
      nn::Node* eps_hat = den.predict_graph(t, t.constant(std::move(x_t)),
                                            t.constant_scalar(static_cast<double>(tstep)));
      return nn::mul_scalar(t, nn::sse(t, eps_hat, t.constant(std::move(eps))),
                            1.0 / static_cast<double>(y.numel()));
    });
    double mean_loss = detail::mean_of(losses);
    report.loss_curve.push_back(mean_loss);
    if (!std::isfinite(mean_loss)) {
      ++report.steps_skipped;
      if (log) log->record({{"stage", "denoiser"}, {"step", step}, {"skipped", true}});
      continue;
    }
    if (cfg.grad_clip > 0) opt.clip_global_norm(cfg.grad_clip);
    opt.step();
    ++report.steps_run;
    report.final_loss = mean_loss;
    if (log && step % cfg.log_every == 0)
      log->record({{"stage", "denoiser"}, {"step", step}, {"loss", mean_loss}});
  }
  if (log) log->flush();
  return report;
}

// ---------------------------------------------------------------------------
// Stage 3: codec (P_phi + entropy model, frozen backbone), Eq.-style RD loss
// with the one-step decode trick.
// ---------------------------------------------------------------------------
struct CodecStepMetrics {
  double loss = 0;
  double bits = 0;
  double sse = 0;
  double bpp_estimate = 0;
  double tau = 0;
  double mean_scale = 0;
  double lambda = 0;
  bool skipped = false;
};

inline StageReport train_codec(CodecContext& ctx, const Dataset& data, const TrainConfig& cfg,
                               MetricsLog* log = nullptr,
                               std::vector<CodecStepMetrics>* metrics_out = nullptr) {
  ToyVae& vae = ctx.vae();
  ToyDenoiser& den = ctx.denoiser();
  ParamEstimator& pphi = ctx.pphi();
  entropy::EntropyModel& em = ctx.entropy_model();
  vae.set_trainable(false);
  den.set_trainable(false);
  pphi.set_trainable(true);
  em.set_trainable(true);

  std::vector<nn::Variable*> params = pphi.variables();
  for (auto* v : em.variables()) params.push_back(v);
  nn::Adam opt(params, cfg.learning_rate);
  StageReport report;

  struct SlotStats {
    double bits = 0, sse = 0, tau = 0, mean_scale = 0;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    pphi.zero_grads();
    em.zero_grads();
    Rng step_rng(Rng::mix(cfg.seed, Rng::mix(0xA3, static_cast<uint64_t>(step))));
    const double lambda = cfg.lambda_set[step_rng.bounded(static_cast<uint32_t>(cfg.lambda_set.size()))];
    const double lambda_eff = lambda * cfg.distortion_scale;
    const int64_t before_iterative = denoise_from_invocations().load();

    std::vector<SlotStats> stats(static_cast<size_t>(cfg.batch_size));
    auto losses = detail::batch_backward(cfg.batch_size, cfg.threads, [&](nn::Tape& t, int i) {
      Rng rng(Rng::mix(cfg.seed, Rng::mix(0xA4, Rng::mix(step, i))));
      ImageTensor crop = data.random_crop(rng.bounded(static_cast<uint32_t>(data.size())),
                                          cfg.crop, rng);
      nn::Node* x = t.constant(crop.chw());
      Tensor y = vae.encode(crop.chw());
      nn::Node* yn = t.constant(y);
      auto pred = pphi.predict_graph(t, yn, lambda);

      // Distortion path: straight-through hard quantization.
      RelaxedQuant ste = quantize_relaxed(t, yn, pred.log_scale, pred.offset,
                                          RelaxMode::kStraightThrough, ctx.config().symbol_bound);
      // Rate path: additive-noise relaxation.
      Tensor qnoise(y.shape());
      for (int64_t k = 0; k < qnoise.numel(); ++k) qnoise[k] = rng.uniform(-0.5, 0.5);
      RelaxedQuant noisy = quantize_relaxed(t, yn, pred.log_scale, pred.offset,
                                            RelaxMode::kAdditiveNoise, ctx.config().symbol_bound,
                                            &qnoise);
      auto [hh, hw] = entropy::EntropyModel::hyper_dims(y.dim(1), y.dim(2));
      Tensor hnoise({ctx.config().hyper_channels, hh, hw});
      for (int64_t k = 0; k < hnoise.numel(); ++k) hnoise[k] = rng.uniform(-0.5, 0.5);
      auto rate = em.rate_bits_graph(t, noisy.transformed, hnoise);

      nn::Node* x_t = ste.latent;
      if (ctx.config().rescale_latent_for_denoise) {
        nn::Node* abar = nn::alpha_bar_continuous_op(t, ctx.schedule(), pred.tau);
        x_t = nn::mul(t, x_t, nn::sqrt_op(t, abar));
      }
      nn::Node* y0 = one_step_decode(t, x_t, pred.tau, den);
      nn::Node* x_hat = vae.decode_graph(t, y0);
      nn::Node* loss = rd_loss(t, x, x_hat, rate.total, lambda_eff);

      SlotStats& s = stats[static_cast<size_t>(i)];
      s.bits = rate.total->value[0];
      s.sse = (loss->value[0] - s.bits) / lambda_eff;
      s.tau = pred.tau->value[0];
      double ms = 0;
      for (int c = 0; c < ctx.config().latent_channels; ++c)
        ms += std::exp(pred.log_scale->value[c]);
      s.mean_scale = ms / ctx.config().latent_channels;
      return loss;
    });

    require(denoise_from_invocations().load() == before_iterative, ErrorKind::kInternal,
            "training must not run the iterative sampler");

    CodecStepMetrics m;
    m.lambda = lambda;
    m.loss = detail::mean_of(losses);
    for (const auto& s : stats) {
      m.bits += s.bits / cfg.batch_size;
      m.sse += s.sse / cfg.batch_size;
      m.tau += s.tau / cfg.batch_size;
      m.mean_scale += s.mean_scale / cfg.batch_size;
    }
    m.bpp_estimate = m.bits / (static_cast<double>(cfg.crop) * cfg.crop);
    report.loss_curve.push_back(m.loss);

    if (!std::isfinite(m.loss)) {
      m.skipped = true;
      ++report.steps_skipped;
      if (log) log->record({{"stage", "codec"}, {"step", step}, {"skipped", true}});
      if (metrics_out) metrics_out->push_back(m);
      continue;
    }
    if (cfg.grad_clip > 0) opt.clip_global_norm(cfg.grad_clip);
    opt.step();
    ++report.steps_run;
    report.final_loss = m.loss;
    if (metrics_out) metrics_out->push_back(m);
    if (log && step % cfg.log_every == 0)
      log->record({{"stage", "codec"},
                   {"step", step},
                   {"loss", m.loss},
                   {"bits", m.bits},
                   {"bpp_estimate", m.bpp_estimate},
                   {"sse", m.sse},
                   {"tau", m.tau},
                   {"mean_scale", m.mean_scale},
                   {"lambda", lambda}});
  }
  if (log) log->flush();
  return report;
}

}  // namespace ldc
