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

#include <Eigen/Core>

#include <cmath>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/math.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/schedule.hpp"

namespace ldc::nn {

// Named parameter owned by a Module. Graph nodes reference the value storage
// directly; gradients are accumulated into `grad` by the trainer.
struct Variable {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

struct Node {
  Tensor value;
  Tensor grad;  // lazily allocated during backward
  bool requires_grad = false;
  std::vector<Node*> parents;
  std::function<void(Node&)> backward;
  Variable* var = nullptr;
};

// Dynamic tape. Nodes are created in topological order by construction, so
// reverse creation order is a valid backward schedule. One tape per sample;
// tapes are independent, so batches can run on separate threads against
// shared (read-only) Variable values.
class Tape {
 public:
  Node* make(Tensor value, std::vector<Node*> parents, std::function<void(Node&)> backward) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = std::move(value);
    n.parents = std::move(parents);
    for (Node* p : n.parents) n.requires_grad = n.requires_grad || p->requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    return &n;
  }

  Node* constant(Tensor value) { return make(std::move(value), {}, nullptr); }

  Node* constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  // Leaf whose gradient is requested (e.g. tau in gradient checks).
  Node* input(Tensor value) {
    Node* n = constant(std::move(value));
    n->requires_grad = true;
    return n;
  }

  Node* param(Variable& var) {
    Node* n = constant(var.value);
    n->requires_grad = var.trainable;
    n->var = &var;
    if (n->requires_grad) param_nodes_.push_back(n);
    return n;
  }

  void backward(Node* root) {
    require(root->value.numel() == 1, ErrorKind::kInternal, "backward root must be scalar");
    if (!root->requires_grad) return;
    root->grad = Tensor::full(root->value.shape(), 1.0);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node& n = *it;
      if (n.grad.defined() && n.backward) n.backward(n);
    }
  }

  // Adds accumulated parameter gradients into the map (keyed by Variable),
  // creating zero tensors on first touch. Iteration follows node creation
  // order, so reductions are deterministic.
  void collect_param_grads(std::unordered_map<Variable*, Tensor>& acc) const {
    for (Node* n : param_nodes_) {
      if (!n->grad.defined()) continue;
      auto [it, inserted] = acc.try_emplace(n->var, Tensor(n->value.shape()));
      Tensor& g = it->second;
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n->grad[i];
    }
  }

  const std::vector<Node*>& param_nodes() const { return param_nodes_; }
  size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
  std::vector<Node*> param_nodes_;
};

inline Tensor& ensure_grad(Node* n) {
  if (!n->grad.defined()) n->grad = Tensor(n->value.shape());
  return n->grad;
}

// ---------------------------------------------------------------------------
// Elementwise ops with broadcasting over three legal shape pairs:
// identical shapes, scalar against anything, and [C] against [C,H,W].
// ---------------------------------------------------------------------------

enum class Broadcast { kSame, kAScalar, kBScalar, kAChannel, kBChannel };

inline Broadcast resolve_broadcast(const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Broadcast::kSame;
  if (a.numel() == 1) return Broadcast::kAScalar;
  if (b.numel() == 1) return Broadcast::kBScalar;
  if (a.ndim() == 1 && b.ndim() == 3 && a.dim(0) == b.dim(0)) return Broadcast::kAChannel;
  if (b.ndim() == 1 && a.ndim() == 3 && b.dim(0) == a.dim(0)) return Broadcast::kBChannel;
  fail(ErrorKind::kInternal, "incompatible shapes ", a.shape_str(), " vs ", b.shape_str());
}

namespace detail {

// Evaluates out[i] = f(a_val(i), b_val(i)) under the broadcast plan, and in
// backward maps an output-position gradient onto each operand.
template <typename FwdF>
Tensor broadcast_eval(const Tensor& a, const Tensor& b, Broadcast plan, FwdF&& f) {
  const Tensor& big = (plan == Broadcast::kAScalar || plan == Broadcast::kAChannel) ? b : a;
  Tensor out(big.shape());
  const int64_t n = out.numel();
  int64_t hw = 1;
  if (plan == Broadcast::kAChannel || plan == Broadcast::kBChannel)
    hw = static_cast<int64_t>(big.dim(1)) * big.dim(2);
  for (int64_t i = 0; i < n; ++i) {
    double av, bv;
    switch (plan) {
      case Broadcast::kSame: av = a[i]; bv = b[i]; break;
      case Broadcast::kAScalar: av = a[0]; bv = b[i]; break;
      case Broadcast::kBScalar: av = a[i]; bv = b[0]; break;
      case Broadcast::kAChannel: av = a[i / hw]; bv = b[i]; break;
      case Broadcast::kBChannel: av = a[i]; bv = b[i / hw]; break;
      default: av = bv = 0; break;
    }
    out[i] = f(av, bv);
  }
  return out;
}

inline void broadcast_accumulate(Tensor& grad, Broadcast plan, bool is_a, const Tensor& big,
                                 const std::function<double(int64_t)>& contribution) {
  bool reduced = (is_a && (plan == Broadcast::kAScalar || plan == Broadcast::kAChannel)) ||
                 (!is_a && (plan == Broadcast::kBScalar || plan == Broadcast::kBChannel));
  const int64_t n = big.numel();
  if (!reduced) {
    for (int64_t i = 0; i < n; ++i) grad[i] += contribution(i);
    return;
  }
  bool channel = (is_a && plan == Broadcast::kAChannel) || (!is_a && plan == Broadcast::kBChannel);
  if (!channel) {
    double s = 0;
    for (int64_t i = 0; i < n; ++i) s += contribution(i);
    grad[0] += s;
  } else {
    int64_t hw = static_cast<int64_t>(big.dim(1)) * big.dim(2);
    for (int64_t i = 0; i < n; ++i) grad[i / hw] += contribution(i);
  }
}

}  // namespace detail

// d(out)/d(a) and d(out)/d(b) evaluated at broadcast positions.
template <typename FwdF, typename DaF, typename DbF>
Node* binary_op(Tape& t, Node* a, Node* b, FwdF&& f, DaF&& da, DbF&& db) {
  Broadcast plan = resolve_broadcast(a->value, b->value);
  Tensor out = detail::broadcast_eval(a->value, b->value, plan, f);
  Tensor av = a->value, bv = b->value;
  return t.make(std::move(out), {a, b}, [a, b, av, bv, plan, da, db](Node& n) {
    const Tensor& big = (plan == Broadcast::kAScalar || plan == Broadcast::kAChannel) ? bv : av;
    int64_t hw = 1;
    if (plan == Broadcast::kAChannel || plan == Broadcast::kBChannel)
      hw = static_cast<int64_t>(big.dim(1)) * big.dim(2);
    auto value_at = [&](const Tensor& v, bool is_a, int64_t i) -> double {
      switch (plan) {
        case Broadcast::kSame: return v[i];
        case Broadcast::kAScalar: return is_a ? v[0] : v[i];
        case Broadcast::kBScalar: return is_a ? v[i] : v[0];
        case Broadcast::kAChannel: return is_a ? v[i / hw] : v[i];
        case Broadcast::kBChannel: return is_a ? v[i] : v[i / hw];
      }
      return 0;
    };
    if (a->requires_grad) {
      Tensor& ga = ensure_grad(a);
      detail::broadcast_accumulate(ga, plan, true, big, [&](int64_t i) {
        return n.grad[i] * da(value_at(av, true, i), value_at(bv, false, i));
      });
    }
    if (b->requires_grad) {
      Tensor& gb = ensure_grad(b);
      detail::broadcast_accumulate(gb, plan, false, big, [&](int64_t i) {
        return n.grad[i] * db(value_at(av, true, i), value_at(bv, false, i));
      });
    }
  });
}

inline Node* add(Tape& t, Node* a, Node* b) {
  return binary_op(t, a, b, [](double x, double y) { return x + y; },
                   [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Node* sub(Tape& t, Node* a, Node* b) {
  return binary_op(t, a, b, [](double x, double y) { return x - y; },
                   [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Node* mul(Tape& t, Node* a, Node* b) {
  return binary_op(t, a, b, [](double x, double y) { return x * y; },
                   [](double, double y) { return y; }, [](double x, double) { return x; });
}

inline Node* div(Tape& t, Node* a, Node* b) {
  return binary_op(t, a, b, [](double x, double y) { return x / y; },
                   [](double, double y) { return 1.0 / y; },
                   [](double x, double y) { return -x / (y * y); });
}

template <typename FwdF, typename GradF>
Node* unary_op(Tape& t, Node* a, FwdF&& f, GradF&& g) {
  Tensor out(a->value.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = f(a->value[i]);
  Tensor av = a->value;
  Tensor ov = out;
  return t.make(std::move(out), {a}, [a, av, ov, g](Node& n) {
    if (!a->requires_grad) return;
    Tensor& ga = ensure_grad(a);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[i] * g(av[i], ov[i]);
  });
}

inline Node* exp_op(Tape& t, Node* a) {
  return unary_op(t, a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

inline Node* log_op(Tape& t, Node* a) {
  return unary_op(t, a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

inline Node* sqrt_op(Tape& t, Node* a) {
  return unary_op(t, a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

inline Node* sigmoid_op(Tape& t, Node* a) {
  return unary_op(t, a, [](double x) { return sigmoid(x); },
                  [](double, double y) { return y * (1.0 - y); });
}

inline Node* silu(Tape& t, Node* a) {
  return unary_op(t, a, [](double x) { return x * sigmoid(x); },
                  [](double x, double) {
                    double s = sigmoid(x);
                    return s * (1.0 + x * (1.0 - s));
                  });
}

inline Node* normal_cdf_op(Tape& t, Node* a) {
  return unary_op(t, a, [](double x) { return normal_cdf(x); },
                  [](double x, double) { return normal_pdf(x); });
}

inline Node* add_scalar(Tape& t, Node* a, double c) {
  return unary_op(t, a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

inline Node* mul_scalar(Tape& t, Node* a, double c) {
  return unary_op(t, a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

// Hard rounding with saturating clamp to [-bound, bound]; gradients pass
// through unchanged (straight-through).
inline Node* round_ste(Tape& t, Node* a, double bound) {
  return unary_op(t, a,
                  [bound](double x) { return clamp(round_half_away(x), -bound, bound); },
                  [](double, double) { return 1.0; });
}

inline Node* detach(Tape& t, Node* a) { return t.constant(a->value); }

// ---------------------------------------------------------------------------
// Reductions and shape ops
// ---------------------------------------------------------------------------

inline Node* sum_all(Tape& t, Node* a) {
  Tensor out = Tensor::scalar(sum(a->value));
  return t.make(std::move(out), {a}, [a](Node& n) {
    if (!a->requires_grad) return;
    Tensor& ga = ensure_grad(a);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[0];
  });
}

inline Node* mean_all(Tape& t, Node* a) {
  return mul_scalar(t, sum_all(t, a), 1.0 / static_cast<double>(a->value.numel()));
}

// Sum of squared differences (the distortion term).
inline Node* sse(Tape& t, Node* a, Node* b) {
  Node* d = sub(t, a, b);
  return sum_all(t, mul(t, d, d));
}

inline Node* global_mean_pool(Tape& t, Node* x) {
  require(x->value.ndim() == 3, ErrorKind::kInternal, "global_mean_pool needs CHW");
  const int c = x->value.dim(0);
  const int64_t hw = static_cast<int64_t>(x->value.dim(1)) * x->value.dim(2);
  Tensor out({c});
  for (int ci = 0; ci < c; ++ci) {
    double s = 0;
    for (int64_t i = 0; i < hw; ++i) s += x->value[ci * hw + i];
    out[ci] = s / static_cast<double>(hw);
  }
  return t.make(std::move(out), {x}, [x, c, hw](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = ensure_grad(x);
    for (int ci = 0; ci < c; ++ci) {
      double g = n.grad[ci] / static_cast<double>(hw);
      for (int64_t i = 0; i < hw; ++i) gx[ci * hw + i] += g;
    }
  });
}

// Slice along dim0; works for [C] vectors and [C,H,W] maps.
inline Node* slice0(Tape& t, Node* x, int from, int count) {
  const Tensor& v = x->value;
  require(v.ndim() >= 1 && from >= 0 && from + count <= v.dim(0), ErrorKind::kInternal,
          "slice0 out of range");
  int64_t inner = v.numel() / v.dim(0);
  std::vector<int> shape = v.shape();
  shape[0] = count;
  Tensor out(shape);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = v[from * inner + i];
  return t.make(std::move(out), {x}, [x, from, inner](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = ensure_grad(x);
    for (int64_t i = 0; i < n.grad.numel(); ++i) gx[from * inner + i] += n.grad[i];
  });
}

inline Node* concat0(Tape& t, Node* a, Node* b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  require(av.ndim() == bv.ndim(), ErrorKind::kInternal, "concat0 rank mismatch");
  for (int i = 1; i < av.ndim(); ++i)
    require(av.dim(i) == bv.dim(i), ErrorKind::kInternal, "concat0 inner dim mismatch");
  std::vector<int> shape = av.shape();
  shape[0] += bv.dim(0);
  Tensor out(shape);
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i];
  for (int64_t i = 0; i < bv.numel(); ++i) out[av.numel() + i] = bv[i];
  int64_t an = av.numel();
  return t.make(std::move(out), {a, b}, [a, b, an](Node& n) {
    if (a->requires_grad) {
      Tensor& ga = ensure_grad(a);
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += n.grad[i];
    }
    if (b->requires_grad) {
      Tensor& gb = ensure_grad(b);
      for (int64_t i = 0; i < gb.numel(); ++i) gb[i] += n.grad[an + i];
    }
  });
}

inline Node* upsample2x(Tape& t, Node* x) {
  const Tensor& v = x->value;
  require(v.ndim() == 3, ErrorKind::kInternal, "upsample2x needs CHW");
  const int c = v.dim(0), h = v.dim(1), w = v.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        double val = v[(static_cast<int64_t>(ci) * h + y) * w + xx];
        int64_t base = (static_cast<int64_t>(ci) * 2 * h + 2 * y) * 2 * w + 2 * xx;
        out[base] = val;
        out[base + 1] = val;
        out[base + 2 * w] = val;
        out[base + 2 * w + 1] = val;
      }
  return t.make(std::move(out), {x}, [x, c, h, w](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = ensure_grad(x);
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          int64_t base = (static_cast<int64_t>(ci) * 2 * h + 2 * y) * 2 * w + 2 * xx;
          gx[(static_cast<int64_t>(ci) * h + y) * w + xx] +=
              n.grad[base] + n.grad[base + 1] + n.grad[base + 2 * w] + n.grad[base + 2 * w + 1];
        }
  });
}

// Top-left crop to (h, w); gradient zero-pads back.
inline Node* crop2d(Tape& t, Node* x, int h, int w) {
  const Tensor& v = x->value;
  require(v.ndim() == 3 && h <= v.dim(1) && w <= v.dim(2), ErrorKind::kInternal, "bad crop2d");
  if (h == v.dim(1) && w == v.dim(2)) return x;
  const int c = v.dim(0), ih = v.dim(1), iw = v.dim(2);
  Tensor out({c, h, w});
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        out[(static_cast<int64_t>(ci) * h + y) * w + xx] =
            v[(static_cast<int64_t>(ci) * ih + y) * iw + xx];
  return t.make(std::move(out), {x}, [x, c, h, w, ih, iw](Node& n) {
    if (!x->requires_grad) return;
    Tensor& gx = ensure_grad(x);
    for (int ci = 0; ci < c; ++ci)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
          gx[(static_cast<int64_t>(ci) * ih + y) * iw + xx] +=
              n.grad[(static_cast<int64_t>(ci) * h + y) * w + xx];
  });
}

// ---------------------------------------------------------------------------
// Dense / convolutional layers
// ---------------------------------------------------------------------------

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline Tensor im2col(const Tensor& x, int k, int stride, int pad, int oh, int ow) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor cols({c * k * k, oh * ow});
  int64_t row = 0;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, ++row) {
        double* dst = cols.data() + row * oh * ow;
        const double* src = x.data() + static_cast<int64_t>(ci) * h * w;
        int64_t idx = 0;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          for (int ox = 0; ox < ow; ++ox, ++idx) {
            int ix = ox * stride + kx - pad;
            dst[idx] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                           ? src[static_cast<int64_t>(iy) * w + ix]
                           : 0.0;
          }
        }
      }
  return cols;
}

inline void col2im_add(Tensor& gx, const Tensor& gcols, int k, int stride, int pad, int oh,
                       int ow) {
  const int c = gx.dim(0), h = gx.dim(1), w = gx.dim(2);
  int64_t row = 0;
  for (int ci = 0; ci < c; ++ci)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx, ++row) {
        const double* src = gcols.data() + row * oh * ow;
        double* dst = gx.data() + static_cast<int64_t>(ci) * h * w;
        int64_t idx = 0;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) {
            idx += ow;
            continue;
          }
          for (int ox = 0; ox < ow; ++ox, ++idx) {
            int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[static_cast<int64_t>(iy) * w + ix] += src[idx];
          }
        }
      }
}

}  // namespace detail

// x: [Cin,H,W], w: [Cout,Cin,k,k], b: [Cout] (may be null).
inline Node* conv2d(Tape& t, Node* x, Node* w, Node* b, int stride, int pad) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  require(xv.ndim() == 3 && wv.ndim() == 4, ErrorKind::kInternal, "conv2d shape ranks");
  require(wv.dim(1) == xv.dim(0), ErrorKind::kInternal, "conv2d channel mismatch: x ",
          xv.shape_str(), " w ", wv.shape_str());
  require(wv.dim(2) == wv.dim(3), ErrorKind::kInternal, "conv2d expects square kernels");
  const int cin = xv.dim(0), h = xv.dim(1), wid = xv.dim(2);
  const int cout = wv.dim(0), k = wv.dim(2);
  const int oh = (h + 2 * pad - k) / stride + 1;
  const int ow = (wid + 2 * pad - k) / stride + 1;
  require(oh >= 1 && ow >= 1, ErrorKind::kInternal, "conv2d output collapsed: input ",
          xv.shape_str(), " k=", k, " stride=", stride);
  const int ckk = cin * k * k;
  const int64_t p = static_cast<int64_t>(oh) * ow;

  Tensor cols = detail::im2col(xv, k, stride, pad, oh, ow);
  Tensor out({cout, oh, ow});
  {
    Eigen::Map<const MatRM> wm(wv.data(), cout, ckk);
    Eigen::Map<const MatRM> cm(cols.data(), ckk, p);
    Eigen::Map<MatRM> om(out.data(), cout, p);
    om.noalias() = wm * cm;
  }
  if (b != nullptr) {
    const Tensor& bv = b->value;
    require(bv.numel() == cout, ErrorKind::kInternal, "conv2d bias size");
    for (int co = 0; co < cout; ++co) {
      double bias = bv[co];
      double* dst = out.data() + co * p;
      for (int64_t i = 0; i < p; ++i) dst[i] += bias;
    }
  }

  std::vector<Node*> parents = {x, w};
  if (b) parents.push_back(b);
  Tensor xval = xv;
  return t.make(std::move(out), std::move(parents),
                [x, w, b, cols, k, stride, pad, oh, ow, cin, cout, ckk, p, xval](Node& n) {
                  Eigen::Map<const MatRM> gy(n.grad.data(), cout, p);
                  if (w->requires_grad) {
                    Tensor& gw = ensure_grad(w);
                    Eigen::Map<MatRM> gwm(gw.data(), cout, ckk);
                    Eigen::Map<const MatRM> cm(cols.data(), ckk, p);
                    gwm.noalias() += gy * cm.transpose();
                  }
                  if (b && b->requires_grad) {
                    Tensor& gb = ensure_grad(b);
                    for (int co = 0; co < cout; ++co) {
                      double s = 0;
                      const double* src = n.grad.data() + co * p;
                      for (int64_t i = 0; i < p; ++i) s += src[i];
                      gb[co] += s;
                    }
                  }
                  if (x->requires_grad) {
                    Tensor gcols({ckk, static_cast<int>(p)});
                    Eigen::Map<const MatRM> wm(w->value.data(), cout, ckk);
                    Eigen::Map<MatRM> gc(gcols.data(), ckk, p);
                    gc.noalias() = wm.transpose() * gy;
                    Tensor& gx = ensure_grad(x);
                    detail::col2im_add(gx, gcols, k, stride, pad, oh, ow);
                  }
                  (void)cin;
                  (void)xval;
                });
}

// y = W x + b with W: [O,I], x: [I], b: [O] (may be null).
inline Node* linear(Tape& t, Node* w, Node* x, Node* b) {
  const Tensor& wv = w->value;
  const Tensor& xv = x->value;
  require(wv.ndim() == 2 && xv.ndim() == 1 && wv.dim(1) == xv.dim(0), ErrorKind::kInternal,
          "linear shape mismatch");
  const int o = wv.dim(0), in = wv.dim(1);
  Tensor out({o});
  for (int i = 0; i < o; ++i) {
    double s = b ? b->value[i] : 0.0;
    const double* row = wv.data() + static_cast<int64_t>(i) * in;
    for (int j = 0; j < in; ++j) s += row[j] * xv[j];
    out[i] = s;
  }
  std::vector<Node*> parents = {w, x};
  if (b) parents.push_back(b);
  return t.make(std::move(out), std::move(parents), [w, x, b, o, in](Node& n) {
    if (w->requires_grad) {
      Tensor& gw = ensure_grad(w);
      for (int i = 0; i < o; ++i)
        for (int j = 0; j < in; ++j) gw[static_cast<int64_t>(i) * in + j] += n.grad[i] * x->value[j];
    }
    if (x->requires_grad) {
      Tensor& gx = ensure_grad(x);
      for (int i = 0; i < o; ++i)
        for (int j = 0; j < in; ++j) gx[j] += n.grad[i] * w->value[static_cast<int64_t>(i) * in + j];
    }
    if (b && b->requires_grad) {
      Tensor& gb = ensure_grad(b);
      for (int i = 0; i < o; ++i) gb[i] += n.grad[i];
    }
  });
}

// Sinusoidal embedding of a (continuous) timestep scalar:
// [sin(t*f_0)...sin(t*f_{H-1}), cos(t*f_0)...cos(t*f_{H-1})],
// f_i = max_period^(-i/(H-1)). Differentiable in t.
inline Node* timestep_embedding(Tape& t, Node* ts, int dim, double max_period = 10000.0) {
  require(ts->value.numel() == 1, ErrorKind::kInternal, "timestep_embedding needs scalar t");
  require(dim % 2 == 0 && dim >= 2, ErrorKind::kInternal, "embedding dim must be even");
  const int half = dim / 2;
  std::vector<double> freqs(static_cast<size_t>(half));
  for (int i = 0; i < half; ++i)
    freqs[static_cast<size_t>(i)] =
        std::exp(-std::log(max_period) * (half == 1 ? 0.0 : static_cast<double>(i) / (half - 1)));
  const double tv = ts->value[0];
  Tensor out({dim});
  for (int i = 0; i < half; ++i) {
    out[i] = std::sin(tv * freqs[static_cast<size_t>(i)]);
    out[half + i] = std::cos(tv * freqs[static_cast<size_t>(i)]);
  }
  return t.make(std::move(out), {ts}, [ts, half, freqs, tv](Node& n) {
    if (!ts->requires_grad) return;
    Tensor& gt = ensure_grad(ts);
    double s = 0;
    for (int i = 0; i < half; ++i) {
      double f = freqs[static_cast<size_t>(i)];
      s += n.grad[i] * f * std::cos(tv * f);
      s += n.grad[half + i] * (-f * std::sin(tv * f));
    }
    gt[0] += s;
  });
}

// Continuous alpha_bar(tau) with its analytic derivative from the schedule.
inline Node* alpha_bar_continuous_op(Tape& t, const NoiseSchedule& schedule, Node* tau) {
  require(tau->value.numel() == 1, ErrorKind::kInternal, "alpha_bar op needs scalar tau");
  NoiseSchedule::ValueGrad vg = schedule.eval(tau->value[0]);
  return t.make(Tensor::scalar(vg.value), {tau}, [tau, vg](Node& n) {
    if (!tau->requires_grad) return;
    ensure_grad(tau)[0] += n.grad[0] * vg.grad;
  });
}

}  // namespace ldc::nn
