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
#include <filesystem>
#include <functional>

#include "ldc/core/rng.hpp"
#include "ldc/nn/adam.hpp"
#include "ldc/nn/graph.hpp"
#include "ldc/nn/module.hpp"

using namespace ldc;
using namespace ldc::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

// Central-difference gradient of a scalar-valued graph w.r.t. one leaf
// tensor. Rebuilds the graph per probe, which keeps it fully independent of
// the backward implementation.
void check_gradients(const std::function<Node*(Tape&, Node*)>& build, Tensor x0,
                     double h = 1e-6, double tol = 1e-6) {
  Tape tape;
  Node* x = tape.input(x0.clone());
  Node* loss = build(tape, x);
  REQUIRE(loss->value.numel() == 1);
  tape.backward(loss);
  REQUIRE(x->grad.defined());
  for (int64_t i = 0; i < x0.numel(); ++i) {
    Tensor xp = x0.clone();
    xp[i] += h;
    Tensor xm = x0.clone();
    xm[i] -= h;
    Tape tp, tm;
    double fp = build(tp, tp.input(std::move(xp)))->value[0];
    double fm = build(tm, tm.input(std::move(xm)))->value[0];
    double fd = (fp - fm) / (2 * h);
    double ad = x->grad[i];
    CAPTURE(i, fd, ad);
    CHECK(std::abs(fd - ad) <= tol * std::max({std::abs(fd), std::abs(ad), 1.0}));
  }
}

}  // namespace

TEST_CASE("elementwise and broadcast gradients", "[nn]") {
  Rng rng(1);
  Tensor x0 = random_tensor({2, 3, 3}, rng);

  SECTION("add/mul/div with channel broadcast") {
    Tensor c = random_tensor({2}, rng);
    for (int64_t i = 0; i < c.numel(); ++i) c[i] = 1.5 + 0.2 * c[i];
    check_gradients(
        [&](Tape& t, Node* x) {
          Node* cv = t.input(c.clone());
          Node* y = mul(t, x, cv);
          y = add(t, y, cv);
          y = div(t, y, cv);
          return sum_all(t, mul(t, y, y));
        },
        x0);
  }

  SECTION("gradient w.r.t. the broadcast [C] operand") {
    Tensor c0 = random_tensor({2}, rng);
    check_gradients(
        [&](Tape& t, Node* cv) {
          Node* x = t.constant(x0.clone());
          Node* y = mul(t, x, cv);
          return sum_all(t, mul(t, y, y));
        },
        c0);
  }

  SECTION("scalar broadcast both sides") {
    Tensor s0 = Tensor::scalar(0.7);
    check_gradients(
        [&](Tape& t, Node* s) {
          Node* x = t.constant(x0.clone());
          Node* y = mul(t, s, x);
          y = add(t, y, s);
          return sse(t, y, t.constant(Tensor(x0.shape())));
        },
        s0);
  }

  SECTION("unary chain exp/log/sqrt/sigmoid/silu/normal_cdf") {
    Tensor z0 = random_tensor({7}, rng, 0.5);
    check_gradients(
        [&](Tape& t, Node* x) {
          Node* a = silu(t, x);
          a = normal_cdf_op(t, a);
          a = add_scalar(t, a, 1.25);
          a = log_op(t, a);
          a = exp_op(t, a);
          a = sqrt_op(t, a);
          a = sigmoid_op(t, a);
          return sum_all(t, a);
        },
        z0, 1e-6, 1e-5);
  }
}

TEST_CASE("mul with aliased operands accumulates both paths", "[nn]") {
  Tape t;
  Node* x = t.input(Tensor::scalar(3.0));
  Node* y = mul(t, x, x);
  t.backward(y);
  CHECK(x->grad[0] == Catch::Approx(6.0));
}

TEST_CASE("round_ste forward rounds and clamps, backward is identity", "[nn]") {
  Tape t;
  Node* x = t.input(Tensor::from({5}, {0.4, 0.5, -2.5, 300.0, -300.0}));
  Node* y = round_ste(t, x, 255.0);
  CHECK(y->value[0] == 0.0);
  CHECK(y->value[1] == 1.0);
  CHECK(y->value[2] == -3.0);
  CHECK(y->value[3] == 255.0);
  CHECK(y->value[4] == -255.0);
  Node* loss = sum_all(t, y);
  t.backward(loss);
  for (int i = 0; i < 5; ++i) CHECK(x->grad[i] == 1.0);
}

TEST_CASE("conv2d gradients (input, weight, bias) vs finite differences", "[nn]") {
  Rng rng(2);
  for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 1}}) {
    Tensor x0 = random_tensor({3, 5, 4}, rng);
    Tensor w0 = random_tensor({2, 3, 3, 3}, rng, 0.5);
    Tensor b0 = random_tensor({2}, rng, 0.1);
    CAPTURE(stride, pad);
    check_gradients(
        [&](Tape& t, Node* x) {
          Node* w = t.constant(w0.clone());
          Node* b = t.constant(b0.clone());
          Node* y = conv2d(t, x, w, b, stride, pad);
          return sum_all(t, mul(t, y, y));
        },
        x0, 1e-6, 1e-5);
    check_gradients(
        [&](Tape& t, Node* w) {
          Node* x = t.constant(x0.clone());
          Node* y = conv2d(t, x, w, nullptr, stride, pad);
          return sum_all(t, mul(t, y, y));
        },
        w0, 1e-6, 1e-5);
    check_gradients(
        [&](Tape& t, Node* b) {
          Node* x = t.constant(x0.clone());
          Node* w = t.constant(w0.clone());
          Node* y = conv2d(t, x, w, b, stride, pad);
          return sum_all(t, mul(t, y, y));
        },
        b0, 1e-6, 1e-5);
  }
}

TEST_CASE("conv2d shapes", "[nn]") {
  Tape t;
  Node* x = t.constant(Tensor({4, 8, 6}));
  Node* w = t.constant(Tensor({16, 4, 3, 3}));
  Node* y1 = conv2d(t, x, w, nullptr, 1, 1);
  CHECK(y1->value.shape() == std::vector<int>{16, 8, 6});
  Node* y2 = conv2d(t, x, w, nullptr, 2, 1);
  CHECK(y2->value.shape() == std::vector<int>{16, 4, 3});
}

TEST_CASE("structural ops gradients", "[nn]") {
  Rng rng(3);
  Tensor x0 = random_tensor({3, 4, 4}, rng);
  check_gradients(
      [&](Tape& t, Node* x) {
        Node* up = upsample2x(t, x);
        Node* crop = crop2d(t, up, 7, 5);
        Node* pooled = global_mean_pool(t, crop);
        Node* s = slice0(t, pooled, 1, 2);
        return sum_all(t, mul(t, s, s));
      },
      x0, 1e-6, 1e-5);
  Tensor a0 = random_tensor({2, 3, 3}, rng);
  Tensor b0 = random_tensor({1, 3, 3}, rng);
  check_gradients(
      [&](Tape& t, Node* a) {
        Node* b = t.constant(b0.clone());
        Node* c = concat0(t, a, b);
        return sse(t, c, t.constant(Tensor({3, 3, 3})));
      },
      a0, 1e-6, 1e-5);
}

TEST_CASE("linear and timestep embedding gradients", "[nn]") {
  Rng rng(4);
  Tensor w0 = random_tensor({4, 6}, rng, 0.5);
  Tensor x0 = random_tensor({6}, rng);
  Tensor b0 = random_tensor({4}, rng);
  check_gradients(
      [&](Tape& t, Node* w) {
        Node* x = t.constant(x0.clone());
        Node* b = t.constant(b0.clone());
        Node* y = linear(t, w, x, b);
        return sum_all(t, mul(t, y, y));
      },
      w0, 1e-6, 1e-5);
  Tensor t0 = Tensor::scalar(37.25);
  check_gradients(
      [&](Tape& t, Node* ts) {
        Node* e = timestep_embedding(t, ts, 16);
        Node* q = mul(t, e, e);
        return sum_all(t, q);
      },
      t0, 1e-5, 1e-5);
}

TEST_CASE("frozen variables receive no gradient but pass it through", "[nn]") {
  Rng rng(5);
  Module m;
  // Hand-rolled two-layer net with a frozen second layer.
  Tensor w1 = random_tensor({3, 3}, rng);
  Tensor w2 = random_tensor({3, 3}, rng);
  Variable* v1 = m.add_variable("w1", w1, true);
  Variable* v2 = m.add_variable("w2", w2, false);
  Tape t;
  Node* x = t.constant(random_tensor({3}, rng));
  Node* h = linear(t, t.param(*v1), x, nullptr);
  Node* y = linear(t, t.param(*v2), h, nullptr);
  Node* loss = sum_all(t, mul(t, y, y));
  t.backward(loss);
  std::unordered_map<Variable*, Tensor> grads;
  t.collect_param_grads(grads);
  REQUIRE(grads.count(v1) == 1);
  CHECK(grads.count(v2) == 0);
  double norm = 0;
  for (int64_t i = 0; i < grads[v1].numel(); ++i) norm += std::abs(grads[v1][i]);
  CHECK(norm > 0);
}

TEST_CASE("adam minimizes a quadratic", "[nn]") {
  Module m;
  Variable* v = m.add_variable("x", Tensor::from({2}, {5.0, -3.0}));
  Adam opt(m.variables(), 0.1);
  for (int i = 0; i < 400; ++i) {
    m.zero_grads();
    Tape t;
    Node* x = t.param(*v);
    Node* target = t.constant(Tensor::from({2}, {1.0, 2.0}));
    Node* loss = sse(t, x, target);
    t.backward(loss);
    std::unordered_map<Variable*, Tensor> grads;
    t.collect_param_grads(grads);
    v->grad = grads[v];
    opt.step();
  }
  CHECK(v->value[0] == Catch::Approx(1.0).margin(1e-3));
  CHECK(v->value[1] == Catch::Approx(2.0).margin(1e-3));
}

TEST_CASE("module checkpoint save/load round trip with manifest validation", "[nn]") {
  auto tmp = std::filesystem::temp_directory_path();
  std::string path = (tmp / "ldc_test_module.ldcw").string();
  Rng rng(6);

  Module a;
  a.add_variable("w", random_tensor({2, 3}, rng));
  a.add_variable("b", random_tensor({3}, rng));
  a.save(path);

  Module b;
  Variable* w = b.add_variable("w", Tensor({2, 3}));
  Variable* bias = b.add_variable("b", Tensor({3}));
  b.load(path);
  CHECK(max_abs_diff(w->value, a.variables()[0]->value) == 0.0);
  CHECK(max_abs_diff(bias->value, a.variables()[1]->value) == 0.0);

  Module wrong_shape;
  wrong_shape.add_variable("w", Tensor({3, 2}));
  wrong_shape.add_variable("b", Tensor({3}));
  CHECK_THROWS_AS(wrong_shape.load(path), Error);

  Module wrong_name;
  wrong_name.add_variable("w2", Tensor({2, 3}));
  wrong_name.add_variable("b", Tensor({3}));
  CHECK_THROWS_AS(wrong_name.load(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("alpha_bar_continuous_op differentiates through the schedule", "[nn]") {
  NoiseSchedule s = NoiseSchedule::default_schedule();
  Tensor tau0 = Tensor::scalar(0.0437);
  check_gradients(
      [&](Tape& t, Node* tau) {
        Node* ab = alpha_bar_continuous_op(t, s, tau);
        return mul(t, ab, ab);
      },
      tau0, 1e-7, 1e-4);
}
