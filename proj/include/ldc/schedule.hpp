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
#include <cstdint>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

enum class ScheduleKind : uint8_t { kLinear = 0, kScaledLinear = 1 };

inline const char* to_string(ScheduleKind k) {
  return k == ScheduleKind::kLinear ? "linear" : "scaled_linear";
}

// Diffusion noise schedule: cumulative signal level alpha_bar over T_max
// steps, as a discrete table plus a continuous, differentiable extension in
// the normalized timestep tau = t / T_max.
//
// Index 0 means fully clean (alpha_bar = 1); the table has T_max + 1 entries
// so a loop "for n = t down to 1" indexes it directly. The continuous
// extension interpolates log(alpha_bar) linearly between grid points: exact
// at the grid, strictly decreasing, and with a well-defined derivative
// almost everywhere.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  ScheduleKind kind() const { return kind_; }
  int t_max() const { return t_max_; }
  double beta_start() const { return beta_start_; }
  double beta_end() const { return beta_end_; }

  double alpha_bar(int t) const {
    require(t >= 0 && t <= t_max_, ErrorKind::kValidation, "timestep ", t, " outside [0, ", t_max_, "]");
    return table_[static_cast<size_t>(t)];
  }

  const std::vector<double>& table() const { return table_; }

  // Continuous alpha_bar(tau), tau in [0, 1]. Grid points return the table
  // entry bitwise.
  double alpha_bar_continuous(double tau) const {
    return eval(tau).value;
  }

  // Analytic d(alpha_bar)/d(tau); at grid nodes the left-cell one-sided
  // derivative is used.
  double alpha_bar_continuous_grad(double tau) const {
    return eval(tau).grad;
  }

  struct ValueGrad {
    double value;
    double grad;
  };

  ValueGrad eval(double tau) const {
    require(tau >= 0.0 && tau <= 1.0, ErrorKind::kValidation, "tau ", tau, " outside [0, 1]");
    double u = tau * t_max_;
    // Snap to the grid so that tau = t / T_max reproduces table entries
    // exactly despite the division/multiplication round trip.
    double r = std::nearbyint(u);
    if (std::abs(u - r) < 1e-9 * std::max(1.0, std::abs(u))) u = r;
    int i = static_cast<int>(std::floor(u));
    if (i >= t_max_) i = t_max_ - 1;
    double frac = u - i;
    const double l0 = log_table_[static_cast<size_t>(i)];
    const double l1 = log_table_[static_cast<size_t>(i) + 1];
    double value = (frac == 0.0) ? table_[static_cast<size_t>(i)]
                 : (frac == 1.0) ? table_[static_cast<size_t>(i) + 1]
                                 : std::exp(l0 + frac * (l1 - l0));
    double grad = value * (l1 - l0) * t_max_;
    return {value, grad};
  }

  static NoiseSchedule build(ScheduleKind kind, int t_max, double beta_start, double beta_end) {
    require(t_max >= 1, ErrorKind::kValidation, "T_max must be >= 1, got ", t_max);
    require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0, ErrorKind::kValidation,
            "need 0 < beta_start <= beta_end < 1, got [", beta_start, ", ", beta_end, "]");
    NoiseSchedule s;
    s.kind_ = kind;
    s.t_max_ = t_max;
    s.beta_start_ = beta_start;
    s.beta_end_ = beta_end;
    s.table_.resize(static_cast<size_t>(t_max) + 1);
    s.table_[0] = 1.0;
    double prod = 1.0;
    for (int t = 1; t <= t_max; ++t) {
      double frac = (t_max == 1) ? 0.0 : static_cast<double>(t - 1) / (t_max - 1);
      double beta;
      if (kind == ScheduleKind::kLinear) {
        beta = beta_start + (beta_end - beta_start) * frac;
      } else {
        double r = std::sqrt(beta_start) + (std::sqrt(beta_end) - std::sqrt(beta_start)) * frac;
        beta = r * r;
      }
      prod *= 1.0 - beta;
      require(prod > 0.0, ErrorKind::kValidation, "alpha_bar underflowed to zero at t=", t);
      s.table_[static_cast<size_t>(t)] = prod;
    }
    s.log_table_.resize(s.table_.size());
    for (size_t i = 0; i < s.table_.size(); ++i) s.log_table_[i] = std::log(s.table_[i]);
    return s;
  }

  static NoiseSchedule default_schedule() {
    return build(ScheduleKind::kLinear, 1000, 1e-4, 0.02);
  }

 private:
  ScheduleKind kind_ = ScheduleKind::kLinear;
  int t_max_ = 0;
  double beta_start_ = 0.0;
  double beta_end_ = 0.0;
  std::vector<double> table_;
  std::vector<double> log_table_;
};

inline NoiseSchedule build_schedule(ScheduleKind kind, int t_max, double beta_start,
                                    double beta_end) {
  return NoiseSchedule::build(kind, t_max, beta_start, beta_end);
}

}  // namespace ldc
