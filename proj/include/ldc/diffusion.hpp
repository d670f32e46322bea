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

#include <atomic>
#include <cmath>
#include <memory>

#include "ldc/common.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/schedule.hpp"

namespace ldc {

// Noise predictor plug-in. Any implementation that can estimate the noise
// content of a latent at a given (possibly fractional) timestep works here;
// the codec itself never looks inside. Implementations must be deterministic
// for fixed weights and inputs.
class DenoiserBackbone {
 public:
  virtual ~DenoiserBackbone() = default;

  virtual int latent_channels() const = 0;
  virtual int spatial_divisibility() const { return 1; }
  virtual const NoiseSchedule& schedule() const = 0;

  // Noise estimate eps(x_t, t); output shape equals input shape.
  virtual Tensor predict(const Tensor& latent, double timestep) const = 0;

  // Graph-mode prediction for training. Only differentiable backbones (the
  // toy denoiser) support it; adapters wrapping inference-only foundation
  // models may leave it unimplemented.
  virtual bool differentiable() const { return false; }
  virtual nn::Node* predict_graph(nn::Tape&, nn::Node* /*latent*/, nn::Node* /*timestep*/) const {
    fail(ErrorKind::kInternal, "backbone does not support graph-mode prediction");
  }
};

// Wraps a backbone and counts predict() calls; used to verify that decoding
// performs exactly t evaluations and that training never runs the iterative
// sampler.
class CountingBackbone : public DenoiserBackbone {
 public:
  explicit CountingBackbone(const DenoiserBackbone& inner) : inner_(inner) {}

  int latent_channels() const override { return inner_.latent_channels(); }
  int spatial_divisibility() const override { return inner_.spatial_divisibility(); }
  const NoiseSchedule& schedule() const override { return inner_.schedule(); }

  Tensor predict(const Tensor& latent, double timestep) const override {
    ++calls_;
    return inner_.predict(latent, timestep);
  }

  bool differentiable() const override { return inner_.differentiable(); }
  nn::Node* predict_graph(nn::Tape& t, nn::Node* latent, nn::Node* timestep) const override {
    ++calls_;
    return inner_.predict_graph(t, latent, timestep);
  }

  int64_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  const DenoiserBackbone& inner_;
  mutable std::atomic<int64_t> calls_{0};
};

// Global instrumentation for the "training never iterates the sampler"
// contract: denoise_from bumps this counter on every invocation.
inline std::atomic<int64_t>& denoise_from_invocations() {
  static std::atomic<int64_t> count{0};
  return count;
}

// x0 estimate from a noisy sample and a noise estimate:
// (x_t - sqrt(1 - abar_t) * eps) / sqrt(abar_t).
inline Tensor estimate_x0(const Tensor& x_t, int t, const Tensor& eps,
                          const NoiseSchedule& schedule) {
  require(t > 0 && t <= schedule.t_max(), ErrorKind::kValidation,
          "estimate_x0: t must be in (0, T_max], got ", t);
  require(x_t.same_shape(eps), ErrorKind::kValidation, "estimate_x0: shape mismatch ",
          x_t.shape_str(), " vs ", eps.shape_str());
  const double abar = schedule.alpha_bar(t);
  const double sa = std::sqrt(abar);
  const double sn = std::sqrt(1.0 - abar);
  Tensor out(x_t.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = (x_t[i] - sn * eps[i]) / sa;
  return out;
}

// One deterministic DDIM step t -> t_prev:
// sqrt(abar_prev) * x0_est + sqrt(1 - abar_prev) * eps.
inline Tensor ddim_step(const Tensor& x_t, int t, int t_prev, const DenoiserBackbone& backbone) {
  const NoiseSchedule& schedule = backbone.schedule();
  require(t_prev >= 0 && t_prev < t && t <= schedule.t_max(), ErrorKind::kValidation,
          "ddim_step: need 0 <= t_prev < t <= T_max, got t=", t, " t_prev=", t_prev);
  Tensor eps = backbone.predict(x_t, static_cast<double>(t));
  require(eps.same_shape(x_t), ErrorKind::kValidation,
          "backbone returned shape ", eps.shape_str(), " for input ", x_t.shape_str());
  Tensor x0 = estimate_x0(x_t, t, eps, schedule);
  const double abar_prev = schedule.alpha_bar(t_prev);
  const double sa = std::sqrt(abar_prev);
  const double sn = std::sqrt(1.0 - abar_prev);
  Tensor out(x_t.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = sa * x0[i] + sn * eps[i];
  return out;
}

// Iterative decoder loop: steps n = t, t-1, ..., 1; exactly t backbone
// evaluations. t = 0 returns the input untouched.
inline Tensor denoise_from(const Tensor& x_t, int t, const DenoiserBackbone& backbone) {
  require(t >= 0 && t <= backbone.schedule().t_max(), ErrorKind::kValidation,
          "denoise_from: t outside [0, T_max]");
  denoise_from_invocations().fetch_add(1);
  Tensor x = x_t;
  for (int n = t; n >= 1; --n) x = ddim_step(x, n, n - 1, backbone);
  return x;
}

// Training-path decode: a single x0 estimate evaluated at the continuous
// timestep tau, differentiable in tau (through the schedule and the
// backbone's timestep embedding) and in x_t.
inline nn::Node* one_step_decode(nn::Tape& tape, nn::Node* x_t, nn::Node* tau,
                                 const DenoiserBackbone& backbone) {
  require(tau->value.numel() == 1, ErrorKind::kValidation, "one_step_decode: tau must be scalar");
  const double tau_v = tau->value[0];
  require(tau_v > 0.0 && tau_v <= 1.0, ErrorKind::kValidation,
          "one_step_decode: tau must be in (0, 1], got ", tau_v);
  const NoiseSchedule& schedule = backbone.schedule();
  nn::Node* t_cont = nn::mul_scalar(tape, tau, static_cast<double>(schedule.t_max()));
  nn::Node* eps = backbone.predict_graph(tape, x_t, t_cont);
  nn::Node* abar = nn::alpha_bar_continuous_op(tape, schedule, tau);
  nn::Node* sa = nn::sqrt_op(tape, abar);
  nn::Node* sn = nn::sqrt_op(tape, nn::add_scalar(tape, nn::mul_scalar(tape, abar, -1.0), 1.0));
  nn::Node* num = nn::sub(tape, x_t, nn::mul(tape, sn, eps));
  return nn::div(tape, num, sa);
}

// Convenience non-graph evaluation of one_step_decode. Works for
// inference-only backbones as well.
inline Tensor one_step_decode_value(const Tensor& x_t, double tau,
                                    const DenoiserBackbone& backbone) {
  if (backbone.differentiable()) {
    nn::Tape tape;
    nn::Node* x = tape.constant(x_t);
    nn::Node* tau_node = tape.constant_scalar(tau);
    return one_step_decode(tape, x, tau_node, backbone)->value;
  }
  require(tau > 0.0 && tau <= 1.0, ErrorKind::kValidation,
          "one_step_decode: tau must be in (0, 1], got ", tau);
  const NoiseSchedule& schedule = backbone.schedule();
  Tensor eps = backbone.predict(x_t, tau * schedule.t_max());
  const double abar = schedule.alpha_bar_continuous(tau);
  const double sa = std::sqrt(abar);
  const double sn = std::sqrt(1.0 - abar);
  Tensor out(x_t.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = (x_t[i] - sn * eps[i]) / sa;
  return out;
}

}  // namespace ldc
