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
#include "ldc/core/math.hpp"

namespace ldc::entropy {

inline constexpr double kSigmaMin = 0.04;
inline constexpr int kCdfPrecision = 16;

// Probability of integer symbol z under a Gaussian (mu, sigma) discretized
// to unit bins, with the tail mass beyond +-bound folded into the edge
// symbols so the alphabet sums to exactly 1.
inline double likelihood(int z, double mu, double sigma, int bound) {
  require(sigma >= kSigmaMin, ErrorKind::kValidation, "sigma ", sigma, " below sigma_min");
  require(z >= -bound && z <= bound, ErrorKind::kValidation, "symbol outside alphabet");
  const double hi = (z >= bound) ? 1.0 : normal_cdf((z + 0.5 - mu) / sigma);
  const double lo = (z <= -bound) ? 0.0 : normal_cdf((z - 0.5 - mu) / sigma);
  // Far tails underflow; keep the result strictly positive so code-length
  // estimates stay finite. The floor is far below one CDF count.
  return std::max(hi - lo, 1e-300);
}

// Full folded PMF over [-bound, bound]. Bins further than ~9 sigma from the
// mean carry no representable mass and are left at zero; CDF quantization
// floors every symbol at one count anyway.
inline std::vector<double> folded_pmf(double mu, double sigma, int bound) {
  require(sigma >= kSigmaMin, ErrorKind::kValidation, "sigma ", sigma, " below sigma_min");
  const int n = 2 * bound + 1;
  std::vector<double> pmf(static_cast<size_t>(n), 0.0);
  int lo_sym = static_cast<int>(std::floor(mu - 9.0 * sigma - 1.0));
  int hi_sym = static_cast<int>(std::ceil(mu + 9.0 * sigma + 1.0));
  lo_sym = std::min(std::max(lo_sym, -bound), bound);
  hi_sym = std::max(std::min(hi_sym, bound), -bound);
  double prev = (lo_sym <= -bound) ? 0.0 : normal_cdf((lo_sym - 0.5 - mu) / sigma);
  for (int z = lo_sym; z <= hi_sym; ++z) {
    double cur = (z >= bound) ? 1.0 : normal_cdf((z + 0.5 - mu) / sigma);
    pmf[static_cast<size_t>(z + bound)] = cur - prev;
    prev = cur;
  }
  // Window edges absorb everything outside the evaluation window.
  if (lo_sym == -bound) {
    // already exact
  } else {
    pmf[static_cast<size_t>(lo_sym + bound)] += normal_cdf((lo_sym - 0.5 - mu) / sigma);
  }
  if (hi_sym < bound) pmf[static_cast<size_t>(hi_sym + bound)] += 1.0 - normal_cdf((hi_sym + 0.5 - mu) / sigma);
  return pmf;
}

// Quantizes a PMF to fixed-point frequencies summing to 2^precision with a
// minimum of one count per symbol, then returns the cumulative table of size
// n+1 (cdf[0] = 0, cdf[n] = 2^precision). Deterministic: adjustments always
// target the currently largest bin, lowest index first.
inline std::vector<uint32_t> quantize_cdf(const std::vector<double>& pmf,
                                          int precision = kCdfPrecision) {
  const size_t n = pmf.size();
  require(n >= 1, ErrorKind::kValidation, "empty pmf");
  const int64_t total = int64_t{1} << precision;
  require(static_cast<int64_t>(n) < total, ErrorKind::kValidation,
          "alphabet too large for precision");
  std::vector<int64_t> freq(n);
  int64_t sum = 0;
  for (size_t i = 0; i < n; ++i) {
    double p = pmf[i] > 0.0 ? pmf[i] : 0.0;
    freq[i] = std::max<int64_t>(1, std::llround(p * static_cast<double>(total)));
    sum += freq[i];
  }
  auto largest = [&]() {
    size_t best = 0;
    for (size_t i = 1; i < n; ++i)
      if (freq[i] > freq[best]) best = i;
    return best;
  };
  while (sum > total) {
    size_t i = largest();
    int64_t take = std::min(freq[i] - 1, sum - total);
    require(take > 0, ErrorKind::kInternal, "cannot normalize pmf");
    freq[i] -= take;
    sum -= take;
  }
  if (sum < total) {
    freq[largest()] += total - sum;
    sum = total;
  }
  std::vector<uint32_t> cdf(n + 1);
  cdf[0] = 0;
  for (size_t i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + static_cast<uint32_t>(freq[i]);
  return cdf;
}

// Code length in bits implied by a quantized CDF for one symbol.
inline double cdf_bits(const std::vector<uint32_t>& cdf, int symbol_index, int precision = kCdfPrecision) {
  uint32_t f = cdf[static_cast<size_t>(symbol_index) + 1] - cdf[static_cast<size_t>(symbol_index)];
  return precision - std::log2(static_cast<double>(f));
}

}  // namespace ldc::entropy
