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
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/math.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/nn/module.hpp"
#include "ldc/quantization.hpp"

namespace ldc {

// Rate-distortion trade-off condition. The model is trained on a fixed set
// of lambda values; other values work but are extrapolation.
struct RateCondition {
  double lambda_value;

  explicit RateCondition(double v) : lambda_value(v) {
    require(v > 0.0, ErrorKind::kValidation, "lambda must be positive, got ", v);
  }
};

inline const std::vector<double>& trained_lambda_set() {
  static const std::vector<double> kSet = {1.0, 5.0, 10.0, 20.0};
  return kSet;
}

inline bool is_trained_lambda(double v) {
  for (double s : trained_lambda_set())
    if (v == s) return true;
  return false;
}

struct PredictedParams {
  QuantParams gamma;
  double tau = 0.0;  // normalized timestep, strictly inside (0, 1)
};

// t = round(tau * T_max), clamped to [1, T_max].
inline int timestep_to_discrete(double tau, int t_max) {
  int t = static_cast<int>(round_half_away(tau * t_max));
  if (t < 1) t = 1;
  if (t > t_max) t = t_max;
  return t;
}

struct ParamEstimatorConfig {
  int latent_channels = 4;
  std::vector<int> widths = {64, 128, 256, 512};  // one entry per stride-2 stage
  double init_log_scale = 0.7;                    // initial quantizer scale ~ 2
  double init_tau = 0.04;
  uint64_t seed = 0x5EED0003ULL;
};

// P_phi(y, lambda): fully convolutional trunk of alternating stride-2 and
// same-resolution 3x3 convolutions with SiLU in between, a (2C+1)-channel
// head with no activation, global mean pooling to 2C+1 scalars, and sigmoid
// on the timestep scalar only. lambda enters as a constant log(lambda) plane
// concatenated to the latent. Output arity is independent of input size.
class ParamEstimator : public nn::Module {
 public:
  explicit ParamEstimator(const ParamEstimatorConfig& cfg = {}) : cfg_(cfg) {
    require(!cfg.widths.empty(), ErrorKind::kValidation, "param estimator needs >= 1 stage");
    Rng rng(cfg.seed);
    int cin = cfg.latent_channels + 1;
    int idx = 0;
    for (int width : cfg.widths) {
      std::string p = "stage" + std::to_string(idx++);
      Layer down;
      down.w = conv_weight(p + ".down.w", width, cin, 3, rng);
      down.b = conv_bias(p + ".down.b", width);
      layers_.push_back(down);
      Layer same;
      same.w = conv_weight(p + ".same.w", width, width, 3, rng);
      same.b = conv_bias(p + ".same.b", width);
      layers_.push_back(same);
      cin = width;
    }
    const int out_ch = 2 * cfg.latent_channels + 1;
    // Zero-initialized head: the initial prediction is the bias, independent
    // of the input, which keeps early training stable.
    head_w_ = add_variable("head.w", Tensor({out_ch, cin, 3, 3}));
    Tensor hb({out_ch});
    for (int c = 0; c < cfg.latent_channels; ++c) hb[c] = cfg.init_log_scale;
    double p0 = clamp(cfg.init_tau, 1e-4, 1.0 - 1e-4);
    hb[2 * cfg.latent_channels] = std::log(p0 / (1.0 - p0));
    head_b_ = add_variable("head.b", std::move(hb));
  }

  const ParamEstimatorConfig& config() const { return cfg_; }
  int latent_channels() const { return cfg_.latent_channels; }
  int output_arity() const { return 2 * cfg_.latent_channels + 1; }

  struct GraphOutput {
    nn::Node* log_scale;  // [C]
    nn::Node* offset;     // [C]
    nn::Node* tau;        // scalar in (0, 1)
  };

  GraphOutput predict_graph(nn::Tape& t, nn::Node* y, double lambda_value) {
    require(y->value.ndim() == 3 && y->value.dim(0) == cfg_.latent_channels,
            ErrorKind::kValidation, "param estimator input shape ", y->value.shape_str());
    require(lambda_value > 0.0, ErrorKind::kValidation, "lambda must be positive");
    const int h = y->value.dim(1), w = y->value.dim(2);
    nn::Node* plane = t.constant(Tensor::full({1, h, w}, std::log(lambda_value)));
    nn::Node* x = nn::concat0(t, y, plane);
    for (size_t i = 0; i < layers_.size(); ++i) {
      const int stride = (i % 2 == 0) ? 2 : 1;
      x = nn::conv2d(t, x, t.param(*layers_[i].w), t.param(*layers_[i].b), stride, 1);
      x = nn::silu(t, x);
    }
    nn::Node* head = nn::conv2d(t, x, t.param(*head_w_), t.param(*head_b_), 1, 1);
    nn::Node* pooled = nn::global_mean_pool(t, head);
    const int c = cfg_.latent_channels;
    GraphOutput out;
    out.log_scale = nn::slice0(t, pooled, 0, c);
    out.offset = nn::slice0(t, pooled, c, c);
    out.tau = nn::sigmoid_op(t, nn::slice0(t, pooled, 2 * c, 1));
    return out;
  }

  // Inference: gamma is cast to float32, the precision used on the wire.
  PredictedParams predict_params(const Tensor& y, const RateCondition& cond) {
    nn::Tape t;
    GraphOutput g = predict_graph(t, t.constant(y), cond.lambda_value);
    PredictedParams p;
    const int c = cfg_.latent_channels;
    p.gamma.log_scale.resize(static_cast<size_t>(c));
    p.gamma.offset.resize(static_cast<size_t>(c));
    for (int i = 0; i < c; ++i) {
      p.gamma.log_scale[static_cast<size_t>(i)] = static_cast<float>(g.log_scale->value[i]);
      p.gamma.offset[static_cast<size_t>(i)] = static_cast<float>(g.offset->value[i]);
    }
    p.tau = g.tau->value[0];
    return p;
  }

 private:
  struct Layer {
    nn::Variable* w;
    nn::Variable* b;
  };

  ParamEstimatorConfig cfg_;
  std::vector<Layer> layers_;
  nn::Variable* head_w_;
  nn::Variable* head_b_;
};

}  // namespace ldc
