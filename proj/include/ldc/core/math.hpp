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

namespace ldc {

// Rounding used by the quantizer and on image write. Ties go away from zero:
// round_half_away(0.5) == 1, round_half_away(-0.5) == -1.
inline double round_half_away(double x) { return std::round(x); }

// Standard normal CDF via Hart's double-precision rational approximation
// (absolute error below 1e-15). Self-contained so that entropy-model CDFs do
// not depend on the platform's libm erf.
inline double normal_cdf(double x) {
  const double z = std::fabs(x);
  double cum;
  if (z > 37.0) {
    cum = 0.0;
  } else {
    const double e = std::exp(-z * z / 2.0);
    if (z < 7.07106781186547) {
      double num = 0.0352624965998911;
      num = num * z + 0.700383064443688;
      num = num * z + 6.37396220353165;
      num = num * z + 33.912866078383;
      num = num * z + 112.079291497871;
      num = num * z + 221.213596169931;
      num = num * z + 220.206867912376;
      double den = 0.0883883476483184;
      den = den * z + 1.75566716318264;
      den = den * z + 16.064177579207;
      den = den * z + 86.7807322029461;
      den = den * z + 296.564248779674;
      den = den * z + 637.333633378831;
      den = den * z + 793.826512519948;
      den = den * z + 440.413735824752;
      cum = e * num / den;
    } else {
      double b = z + 0.65;
      b = z + 4.0 / b;
      b = z + 3.0 / b;
      b = z + 2.0 / b;
      b = z + 1.0 / b;
      cum = e / (b * 2.506628274631000502);
    }
  }
  return x > 0.0 ? 1.0 - cum : cum;
}

inline double normal_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

inline double sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace ldc
