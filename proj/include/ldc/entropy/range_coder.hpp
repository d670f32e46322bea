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

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/entropy/gaussian.hpp"

namespace ldc::entropy {

// Byte-oriented range coder with 32-bit range and 16-bit fixed-point CDFs.
//
// The coder narrows the interval [low, low + range) by the symbol's CDF
// slice and emits the top byte whenever the range drops below 2^24. Carries
// are resolved by buffering one byte plus a run of 0xFF bytes (the only
// bytes a carry can ripple through). Integer arithmetic only, so streams
// are identical across platforms.
//
// Worst-case overhead per symbol is the truncation of range/2^16, under
// 0.006 bits; the flush adds five bytes (the first emitted byte is a
// leading zero the decoder skips as part of its 5-byte priming read).
class RangeEncoder {
 public:
  // cdf: quantized cumulative table, cdf[0] = 0, cdf.back() = 2^precision,
  // strictly increasing (every symbol has nonzero mass).
  void encode(int symbol, const std::vector<uint32_t>& cdf, int precision = kCdfPrecision) {
    require(symbol >= 0 && symbol + 1 < static_cast<int>(cdf.size()), ErrorKind::kValidation,
            "symbol ", symbol, " outside CDF support");
    const uint32_t cum = cdf[static_cast<size_t>(symbol)];
    const uint32_t freq = cdf[static_cast<size_t>(symbol) + 1] - cum;
    require(freq > 0, ErrorKind::kValidation, "symbol ", symbol, " has zero mass");
    const uint32_t r = range_ >> precision;
    low_ += static_cast<uint64_t>(r) * cum;
    range_ = r * freq;
    while (range_ < kTopValue) {
      shift_low();
      range_ <<= 8;
    }
  }

  std::vector<uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

 private:
  static constexpr uint32_t kTopValue = 1u << 24;

  void shift_low() {
    if (low_ < 0xFF000000ULL || low_ > 0xFFFFFFFFULL) {
      const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
      out_.push_back(static_cast<uint8_t>(cache_ + carry));
      while (pending_ > 0) {
        out_.push_back(static_cast<uint8_t>(0xFF + carry));
        --pending_;
      }
      cache_ = static_cast<uint8_t>(low_ >> 24);
    } else {
      ++pending_;
    }
    low_ = (low_ << 8) & 0xFFFFFFFFULL;
  }

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  int64_t pending_ = 0;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
    for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
  }
  explicit RangeDecoder(const std::vector<uint8_t>& data) : RangeDecoder(data.data(), data.size()) {}

  int decode(const std::vector<uint32_t>& cdf, int precision = kCdfPrecision) {
    const uint32_t r = range_ >> precision;
    uint32_t v = code_ / r;
    const uint32_t max_v = (1u << precision) - 1;
    if (v > max_v) v = max_v;
    // cdf is strictly increasing: the symbol is the last index with cdf <= v.
    auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
    int symbol = static_cast<int>(it - cdf.begin()) - 1;
    const uint32_t cum = cdf[static_cast<size_t>(symbol)];
    const uint32_t freq = cdf[static_cast<size_t>(symbol) + 1] - cum;
    code_ -= r * cum;
    range_ = r * freq;
    while (range_ < kTopValue) {
      code_ = (code_ << 8) | next_byte();
      range_ <<= 8;
    }
    return symbol;
  }

  // A well-formed stream never reads past its end (the encoder's flush
  // covers all renormalization reads), so any overrun means truncation.
  void check_consumed() const {
    require(!overrun_, ErrorKind::kFormat, "truncated range-coded stream");
  }

  size_t consumed() const { return pos_; }

 private:
  static constexpr uint32_t kTopValue = 1u << 24;

  uint8_t next_byte() {
    if (pos_ >= size_) {
      overrun_ = true;
      return 0;
    }
    return data_[pos_++];
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  bool overrun_ = false;
};

// Convenience pair used by tests and the sweep: one shared CDF for a whole
// symbol vector.
inline std::vector<uint8_t> range_encode(const std::vector<int>& symbols,
                                         const std::vector<uint32_t>& cdf) {
  RangeEncoder enc;
  for (int s : symbols) enc.encode(s, cdf);
  return enc.finish();
}

inline std::vector<int> range_decode(const std::vector<uint8_t>& bytes,
                                     const std::vector<uint32_t>& cdf, size_t count) {
  RangeDecoder dec(bytes);
  std::vector<int> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = dec.decode(cdf);
  dec.check_consumed();
  return out;
}

}  // namespace ldc::entropy
