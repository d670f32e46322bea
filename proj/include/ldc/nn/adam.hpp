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
#include <unordered_map>
#include <vector>

#include "ldc/nn/graph.hpp"

namespace ldc::nn {

class Adam {
 public:
  explicit Adam(std::vector<Variable*> params, double lr = 1e-4, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Variable* v : params_) {
      m_[v] = Tensor(v->value.shape());
      v_[v] = Tensor(v->value.shape());
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  // Scales gradients so their global L2 norm is at most max_norm.
  // Returns the pre-clip norm.
  double clip_global_norm(double max_norm) {
    double sq = 0;
    for (Variable* p : params_) {
      if (!p->grad.defined()) continue;
      for (int64_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
    }
    double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm) {
      double scale = max_norm / norm;
      for (Variable* p : params_) {
        if (!p->grad.defined()) continue;
        for (int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= scale;
      }
    }
    return norm;
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (Variable* p : params_) {
      if (!p->trainable || !p->grad.defined()) continue;
      Tensor& m = m_[p];
      Tensor& v = v_[p];
      for (int64_t i = 0; i < p->value.numel(); ++i) {
        double g = p->grad[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

 private:
  std::vector<Variable*> params_;
  std::unordered_map<Variable*, Tensor> m_;
  std::unordered_map<Variable*, Tensor> v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace ldc::nn
