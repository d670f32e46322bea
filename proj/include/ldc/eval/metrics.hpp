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

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/image.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/nn/module.hpp"

namespace ldc::eval {

// PSNR in dB over all channels; identical images report +infinity rather
// than erroring so batch jobs never abort.
inline double psnr(const ImageTensor& x, const ImageTensor& x_hat) {
  require(x.chw().same_shape(x_hat.chw()), ErrorKind::kValidation, "psnr: shape mismatch");
  double mse = 0;
  const int64_t n = x.chw().numel();
  for (int64_t i = 0; i < n; ++i) {
    double d = x.chw()[i] - x_hat.chw()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<size_t>(size));
  double sum = 0;
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    w[static_cast<size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    sum += w[static_cast<size_t>(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable valid convolution of a single-channel plane.
inline Tensor blur_valid(const Tensor& plane, const std::vector<double>& win) {
  const int h = plane.dim(0), w = plane.dim(1);
  const int k = static_cast<int>(win.size());
  const int oh = h - k + 1, ow = w - k + 1;
  Tensor rows({h, ow});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += win[static_cast<size_t>(i)] * plane[y * w + x + i];
      rows[y * ow + x] = s;
    }
  Tensor out({oh, ow});
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += win[static_cast<size_t>(i)] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

inline Tensor avg_pool2(const Tensor& plane) {
  const int h = plane.dim(0) / 2, w = plane.dim(1) / 2;
  Tensor out({h, w});
  const int iw = plane.dim(1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[y * w + x] = 0.25 * (plane[(2 * y) * iw + 2 * x] + plane[(2 * y) * iw + 2 * x + 1] +
                               plane[(2 * y + 1) * iw + 2 * x] + plane[(2 * y + 1) * iw + 2 * x + 1]);
  return out;
}

inline Tensor channel_plane(const Tensor& chw, int c) {
  const int h = chw.dim(1), w = chw.dim(2);
  Tensor out({h, w});
  for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) out[i] = chw[c * h * w + i];
  return out;
}

struct SsimTerms {
  double cs;    // mean contrast-structure term, clamped at 0
  double ssim;  // mean full ssim (luminance * cs), clamped at 0
};

inline SsimTerms ssim_terms(const Tensor& x, const Tensor& y, const std::vector<double>& win) {
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  Tensor mx = blur_valid(x, win), my = blur_valid(y, win);
  Tensor x2(x.shape()), y2(y.shape()), xy(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    x2[i] = x[i] * x[i];
    y2[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  Tensor sx = blur_valid(x2, win), sy = blur_valid(y2, win), sxy = blur_valid(xy, win);
  double cs_sum = 0, ssim_sum = 0;
  for (int64_t i = 0; i < mx.numel(); ++i) {
    double vx = sx[i] - mx[i] * mx[i];
    double vy = sy[i] - my[i] * my[i];
    double cov = sxy[i] - mx[i] * my[i];
    double cs = (2 * cov + c2) / (vx + vy + c2);
    double lum = (2 * mx[i] * my[i] + c1) / (mx[i] * mx[i] + my[i] * my[i] + c1);
    cs_sum += std::max(cs, 0.0);
    ssim_sum += std::max(lum * cs, 0.0);
  }
  const double n = static_cast<double>(mx.numel());
  return {cs_sum / n, ssim_sum / n};
}

}  // namespace detail

// 5-scale MS-SSIM (11x11 Gaussian, sigma 1.5, valid convolution, 2x2 average
// pooling between scales, weights 0.0448/0.2856/0.3001/0.2363/0.1333),
// computed per channel and averaged. Inputs must be at least 176px on each
// side so the window fits at the coarsest scale.
inline double ms_ssim(const ImageTensor& x, const ImageTensor& x_hat) {
  require(x.chw().same_shape(x_hat.chw()), ErrorKind::kValidation, "ms_ssim: shape mismatch");
  static const double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  const int min_side = std::min(x.height(), x.width());
  require(min_side >= 176, ErrorKind::kValidation, "ms_ssim: input must be >= 176px per side for 5 scales, got ",
          x.width(), "x", x.height());
  const auto win = detail::gaussian_window(11, 1.5);
  double result = 1.0;
  for (int c = 0; c < 3; ++c) {
    Tensor a = detail::channel_plane(x.chw(), c);
    Tensor b = detail::channel_plane(x_hat.chw(), c);
    double channel = 1.0;
    for (int scale = 0; scale < 5; ++scale) {
      detail::SsimTerms terms = detail::ssim_terms(a, b, win);
      if (scale < 4) {
        channel *= std::pow(terms.cs, kWeights[scale]);
        a = detail::avg_pool2(a);
        b = detail::avg_pool2(b);
      } else {
        channel *= std::pow(terms.ssim, kWeights[scale]);
      }
    }
    result += channel;
  }
  return (result - 1.0) / 3.0;
}

// ---------------------------------------------------------------------------
// Perceptual scores with a pluggable feature extractor.
// ---------------------------------------------------------------------------

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  // Multi-layer feature maps (for the pairwise LPIPS-like distance).
  virtual std::vector<Tensor> feature_maps(const ImageTensor& img) const = 0;
  // Global embedding (for the FID-like Gaussian fit).
  virtual std::vector<double> embedding(const ImageTensor& img) const = 0;
  virtual std::string name() const = 0;
};

// Fixed-seed random conv features. Untrained random projections preserve
// distributional differences well enough for directional desk-scale
// comparisons; absolute values are not comparable to any published metric.
class TinyFeatureNet : public nn::Module, public FeatureExtractor {
 public:
  explicit TinyFeatureNet(uint64_t seed = 0xFEA70001ULL) {
    Rng rng(seed);
    w1_ = conv_weight("w1", 16, 3, 3, rng);
    b1_ = conv_bias("b1", 16);
    w2_ = conv_weight("w2", 32, 16, 3, rng);
    b2_ = conv_bias("b2", 32);
    w3_ = conv_weight("w3", 64, 32, 3, rng);
    b3_ = conv_bias("b3", 64);
    set_trainable(false);
  }

  std::vector<Tensor> feature_maps(const ImageTensor& img) const override {
    auto* self = const_cast<TinyFeatureNet*>(this);
    nn::Tape t;
    nn::Node* x = t.constant(img.chw());
    nn::Node* f1 = nn::silu(t, nn::conv2d(t, x, t.param(*self->w1_), t.param(*self->b1_), 2, 1));
    nn::Node* f2 = nn::silu(t, nn::conv2d(t, f1, t.param(*self->w2_), t.param(*self->b2_), 2, 1));
    nn::Node* f3 = nn::silu(t, nn::conv2d(t, f2, t.param(*self->w3_), t.param(*self->b3_), 2, 1));
    return {f1->value, f2->value, f3->value};
  }

  std::vector<double> embedding(const ImageTensor& img) const override {
    Tensor last = feature_maps(img).back();
    const int c = last.dim(0);
    const int64_t hw = static_cast<int64_t>(last.dim(1)) * last.dim(2);
    std::vector<double> e(static_cast<size_t>(c));
    for (int ci = 0; ci < c; ++ci) {
      double s = 0;
      for (int64_t i = 0; i < hw; ++i) s += last[ci * hw + i];
      e[static_cast<size_t>(ci)] = s / static_cast<double>(hw);
    }
    return e;
  }

  std::string name() const override { return "tiny-random-conv"; }

 private:
  nn::Variable *w1_, *b1_, *w2_, *b2_, *w3_, *b3_;
};

// Pairwise perceptual distance: channel-normalized feature difference,
// averaged over positions and layers. Lower is better; 0 for identical
// images.
inline double lpips_like(const ImageTensor& x, const ImageTensor& x_hat,
                         const FeatureExtractor& fe) {
  require(x.chw().same_shape(x_hat.chw()), ErrorKind::kValidation, "lpips_like: shape mismatch");
  auto fx = fe.feature_maps(x);
  auto fy = fe.feature_maps(x_hat);
  require(fx.size() == fy.size(), ErrorKind::kInternal, "extractor layer count mismatch");
  double total = 0;
  for (size_t l = 0; l < fx.size(); ++l) {
    const Tensor& a = fx[l];
    const Tensor& b = fy[l];
    const int c = a.dim(0);
    const int64_t hw = static_cast<int64_t>(a.dim(1)) * a.dim(2);
    double layer = 0;
    for (int64_t i = 0; i < hw; ++i) {
      double na = 1e-10, nb = 1e-10;
      for (int ci = 0; ci < c; ++ci) {
        na += a[ci * hw + i] * a[ci * hw + i];
        nb += b[ci * hw + i] * b[ci * hw + i];
      }
      na = std::sqrt(na);
      nb = std::sqrt(nb);
      double d = 0;
      for (int ci = 0; ci < c; ++ci) {
        double diff = a[ci * hw + i] / na - b[ci * hw + i] / nb;
        d += diff * diff;
      }
      layer += d;
    }
    total += layer / static_cast<double>(hw);
  }
  return total / static_cast<double>(fx.size());
}

// Frechet distance between Gaussian fits N(mu1, S1), N(mu2, S2):
// |mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
inline double frechet_distance(const std::vector<std::vector<double>>& a,
                               const std::vector<std::vector<double>>& b) {
  require(!a.empty() && !b.empty(), ErrorKind::kValidation, "frechet: empty sets");
  const int d = static_cast<int>(a[0].size());
  auto fit = [d](const std::vector<std::vector<double>>& s, Eigen::VectorXd& mu,
                 Eigen::MatrixXd& cov) {
    const int n = static_cast<int>(s.size());
    mu = Eigen::VectorXd::Zero(d);
    for (const auto& row : s)
      for (int i = 0; i < d; ++i) mu[i] += row[static_cast<size_t>(i)];
    mu /= n;
    cov = Eigen::MatrixXd::Zero(d, d);
    if (n < 2) return;
    for (const auto& row : s) {
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v[i] = row[static_cast<size_t>(i)] - mu[i];
      cov += v * v.transpose();
    }
    cov /= (n - 1);
  };
  Eigen::VectorXd mu1, mu2;
  Eigen::MatrixXd s1, s2;
  fit(a, mu1, s1);
  fit(b, mu2, s2);

  auto sqrtm = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
  };
  Eigen::MatrixXd root1 = sqrtm(s1);
  Eigen::MatrixXd inner = sqrtm(root1 * s2 * root1);
  double dist = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * inner.trace();
  return std::max(dist, 0.0);
}

struct PerceptualScores {
  double lpips_like = 0;
  double fid_like = 0;
  bool lpips_computed = false;
  bool fid_computed = false;
  int count_x = 0;
  int count_y = 0;
  std::string notice;
};

// Paired LPIPS-like (mean over pairs) plus FID-like between the two sets.
// A null extractor skips both with a notice instead of failing.
inline PerceptualScores perceptual_scores(const std::vector<ImageTensor>& xs,
                                          const std::vector<ImageTensor>& x_hats,
                                          const FeatureExtractor* fe, int min_fid_count = 10) {
  PerceptualScores out;
  out.count_x = static_cast<int>(xs.size());
  out.count_y = static_cast<int>(x_hats.size());
  if (fe == nullptr) {
    out.notice = "no feature extractor available; perceptual metrics skipped";
    return out;
  }
  require(xs.size() == x_hats.size(), ErrorKind::kValidation,
          "perceptual_scores: paired sets must have equal size");
  require(!xs.empty(), ErrorKind::kValidation, "perceptual_scores: empty sets");
  double lp = 0;
  for (size_t i = 0; i < xs.size(); ++i) lp += lpips_like(xs[i], x_hats[i], *fe);
  out.lpips_like = lp / static_cast<double>(xs.size());
  out.lpips_computed = true;
  if (static_cast<int>(xs.size()) >= min_fid_count &&
      static_cast<int>(x_hats.size()) >= min_fid_count) {
    std::vector<std::vector<double>> ex, ey;
    for (const auto& img : xs) ex.push_back(fe->embedding(img));
    for (const auto& img : x_hats) ey.push_back(fe->embedding(img));
    out.fid_like = frechet_distance(ex, ey);
    out.fid_computed = true;
  } else {
    out.notice = cat("FID-like score skipped: need >= ", min_fid_count, " samples per set");
  }
  return out;
}

}  // namespace ldc::eval
