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
#include "ldc/schedule.hpp"

using namespace ldc;

namespace {

// Oracle: cumulative product evaluated independently, accumulating in log
// space instead of a running product.
double alpha_bar_oracle(int t, int t_max, double b0, double b1) {
  double log_sum = 0;
  for (int s = 1; s <= t; ++s) {
    double frac = (t_max == 1) ? 0.0 : static_cast<double>(s - 1) / (t_max - 1);
    log_sum += std::log1p(-(b0 + (b1 - b0) * frac));
  }
  return std::exp(log_sum);
}

}  // namespace

TEST_CASE("build_schedule matches iterative product oracle", "[schedule]") {
  NoiseSchedule s = build_schedule(ScheduleKind::kLinear, 1000, 1e-4, 0.02);
  REQUIRE(s.table().size() == 1001);
  // Full-length cumulative product for the standard linear schedule.
  double expected = alpha_bar_oracle(1000, 1000, 1e-4, 0.02);
  CHECK(expected == Catch::Approx(4.036e-5).epsilon(2e-3));
  CHECK(s.alpha_bar(1000) == Catch::Approx(expected).epsilon(1e-10));
  for (int t : {1, 17, 250, 999})
    CHECK(s.alpha_bar(t) == Catch::Approx(alpha_bar_oracle(t, 1000, 1e-4, 0.02)).epsilon(1e-10));
}

TEST_CASE("build_schedule single step and boundary", "[schedule]") {
  const double beta = 0.003;
  NoiseSchedule s = build_schedule(ScheduleKind::kLinear, 1, beta, beta);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) == 1.0 - beta);
  NoiseSchedule d = NoiseSchedule::default_schedule();
  CHECK(d.alpha_bar(0) == 1.0);
}

TEST_CASE("build_schedule scaled_linear kind", "[schedule]") {
  NoiseSchedule s = build_schedule(ScheduleKind::kScaledLinear, 10, 0.00085, 0.012);
  // First beta is beta_start under both kinds.
  CHECK(s.alpha_bar(1) == Catch::Approx(1.0 - 0.00085).epsilon(1e-12));
  // Strictly decreasing, all entries in (0, 1].
  for (int t = 1; t <= 10; ++t) {
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.alpha_bar(t) > 0.0);
    CHECK(s.alpha_bar(t) <= 1.0);
  }
}

TEST_CASE("build_schedule rejects invalid parameters", "[schedule]") {
  CHECK_THROWS_AS(build_schedule(ScheduleKind::kLinear, 0, 1e-4, 0.02), Error);
  CHECK_THROWS_AS(build_schedule(ScheduleKind::kLinear, 10, 0.0, 0.02), Error);
  CHECK_THROWS_AS(build_schedule(ScheduleKind::kLinear, 10, 0.03, 0.02), Error);
  CHECK_THROWS_AS(build_schedule(ScheduleKind::kLinear, 10, 1e-4, 1.0), Error);
}

TEST_CASE("alpha_bar_continuous boundaries and grid agreement", "[schedule]") {
  NoiseSchedule s = NoiseSchedule::default_schedule();
  CHECK(s.alpha_bar_continuous(0.0) == 1.0);
  // Grid consistency: exact (bitwise) at every grid point.
  double max_diff = 0;
  for (int t = 0; t <= s.t_max(); ++t) {
    double tau = static_cast<double>(t) / s.t_max();
    max_diff = std::max(max_diff, std::abs(s.alpha_bar_continuous(tau) - s.alpha_bar(t)));
  }
  CHECK(max_diff == 0.0);
  CHECK_THROWS_AS(s.alpha_bar_continuous(-0.001), Error);
  CHECK_THROWS_AS(s.alpha_bar_continuous(1.001), Error);
}

TEST_CASE("alpha_bar_continuous brackets table values between grid points", "[schedule]") {
  // Oracle: a 10x denser schedule of the same family must bracket the
  // interpolant's values between the two neighbouring coarse entries.
  NoiseSchedule s = build_schedule(ScheduleKind::kLinear, 100, 1e-4, 0.02);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    double tau = rng.uniform(0.0, 1.0);
    int t_lo = static_cast<int>(std::floor(tau * 100));
    int t_hi = std::min(t_lo + 1, 100);
    double v = s.alpha_bar_continuous(tau);
    CHECK(v <= s.alpha_bar(t_lo) + 1e-15);
    CHECK(v >= s.alpha_bar(t_hi) - 1e-15);
  }
}

TEST_CASE("alpha_bar_continuous strictly decreasing", "[schedule]") {
  NoiseSchedule s = NoiseSchedule::default_schedule();
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    double a = rng.uniform(0.0, 1.0);
    double b = rng.uniform(0.0, 1.0);
    if (a == b) continue;
    double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(s.alpha_bar_continuous(lo) > s.alpha_bar_continuous(hi));
  }
}

TEST_CASE("alpha_bar_continuous analytic gradient matches finite differences", "[schedule]") {
  NoiseSchedule s = NoiseSchedule::default_schedule();
  Rng rng(23);
  const double h = 1e-7;
  int checked = 0;
  while (checked < 100) {
    double tau = rng.uniform(2e-3, 1.0 - 2e-3);
    // Stay away from grid kinks where the derivative is one-sided.
    double u = tau * s.t_max();
    if (std::abs(u - std::nearbyint(u)) < 50 * h * s.t_max()) continue;
    double fd = (s.alpha_bar_continuous(tau + h) - s.alpha_bar_continuous(tau - h)) / (2 * h);
    double an = s.alpha_bar_continuous_grad(tau);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max(std::abs(an), 1e-12));
    ++checked;
  }
}
