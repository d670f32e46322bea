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

#include <cstdint>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/bytes.hpp"
#include "ldc/schedule.hpp"

namespace ldc {

// .ldc container. Exact layout (all integers little-endian) documented in
// docs/bitstream.md and pinned by golden tests. The header alone carries
// everything the decoder needs besides the checkpoints: image geometry, the
// schedule, the timestep t, and the per-channel affine parameters gamma.
inline constexpr char kStreamMagic[4] = {'L', 'D', 'C', '1'};
inline constexpr uint8_t kStreamVersion = 1;
inline constexpr uint8_t kCustomLambdaIndex = 0xFF;

struct StreamHeader {
  uint32_t orig_height = 0;
  uint32_t orig_width = 0;
  uint8_t latent_channels = 4;
  uint8_t downsample_factor = 8;
  uint16_t t_max = 1000;
  uint8_t schedule_kind = 0;  // ScheduleKind
  float beta_start = 1e-4f;
  float beta_end = 0.02f;
  uint16_t timestep = 0;       // t: denoising steps for the decoder
  uint8_t lambda_index = 0;    // index into the trained lambda set; 0xFF = custom
  uint16_t symbol_bound = 255; // K
  std::vector<float> gamma_log_scale;  // C entries
  std::vector<float> gamma_offset;     // C entries

  int padded_height() const {
    const int f = downsample_factor;
    return static_cast<int>((orig_height + f - 1) / f) * f;
  }
  int padded_width() const {
    const int f = downsample_factor;
    return static_cast<int>((orig_width + f - 1) / f) * f;
  }
  int latent_height() const { return padded_height() / downsample_factor; }
  int latent_width() const { return padded_width() / downsample_factor; }
};

struct CompressedStream {
  StreamHeader header;
  std::vector<uint8_t> hyper_payload;
  std::vector<uint8_t> main_payload;
};

inline std::vector<uint8_t> serialize_stream(const CompressedStream& s) {
  const auto& h = s.header;
  require(h.gamma_log_scale.size() == h.latent_channels &&
              h.gamma_offset.size() == h.latent_channels,
          ErrorKind::kValidation, "gamma arity must equal channel count");
  ByteWriter w;
  w.bytes(reinterpret_cast<const uint8_t*>(kStreamMagic), 4);
  w.u8(kStreamVersion);
  w.u32(h.orig_height);
  w.u32(h.orig_width);
  w.u8(h.latent_channels);
  w.u8(h.downsample_factor);
  w.u16(h.t_max);
  w.u8(h.schedule_kind);
  w.f32(h.beta_start);
  w.f32(h.beta_end);
  w.u16(h.timestep);
  w.u8(h.lambda_index);
  w.u16(h.symbol_bound);
  for (float v : h.gamma_log_scale) w.f32(v);
  for (float v : h.gamma_offset) w.f32(v);
  w.u32(static_cast<uint32_t>(s.hyper_payload.size()));
  w.u32(crc32_of(s.hyper_payload));
  w.bytes(s.hyper_payload);
  w.u32(static_cast<uint32_t>(s.main_payload.size()));
  w.u32(crc32_of(s.main_payload));
  w.bytes(s.main_payload);
  return w.take();
}

inline CompressedStream parse_stream(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  std::string magic = r.str(4);
  require(magic == std::string(kStreamMagic, 4), ErrorKind::kFormat,
          "bad magic: not an .ldc stream");
  uint8_t version = r.u8();
  require(version == kStreamVersion, ErrorKind::kFormat, "unsupported stream version ",
          static_cast<int>(version));
  CompressedStream s;
  StreamHeader& h = s.header;
  h.orig_height = r.u32();
  h.orig_width = r.u32();
  require(h.orig_height > 0 && h.orig_width > 0, ErrorKind::kFormat, "zero image dimensions");
  h.latent_channels = r.u8();
  h.downsample_factor = r.u8();
  require(h.latent_channels > 0 && h.downsample_factor > 0, ErrorKind::kFormat,
          "bad channel/factor fields");
  h.t_max = r.u16();
  h.schedule_kind = r.u8();
  require(h.schedule_kind <= 1, ErrorKind::kFormat, "unknown schedule kind");
  h.beta_start = r.f32();
  h.beta_end = r.f32();
  h.timestep = r.u16();
  require(h.timestep <= h.t_max, ErrorKind::kFormat, "timestep exceeds T_max");
  h.lambda_index = r.u8();
  h.symbol_bound = r.u16();
  h.gamma_log_scale.resize(h.latent_channels);
  for (auto& v : h.gamma_log_scale) v = r.f32();
  h.gamma_offset.resize(h.latent_channels);
  for (auto& v : h.gamma_offset) v = r.f32();
  uint32_t hyper_len = r.u32();
  uint32_t hyper_crc = r.u32();
  s.hyper_payload = r.bytes(hyper_len);
  require(crc32_of(s.hyper_payload) == hyper_crc, ErrorKind::kFormat,
          "corrupt stream: hyper payload checksum mismatch");
  uint32_t main_len = r.u32();
  uint32_t main_crc = r.u32();
  s.main_payload = r.bytes(main_len);
  require(crc32_of(s.main_payload) == main_crc, ErrorKind::kFormat,
          "corrupt stream: main payload checksum mismatch");
  require(r.remaining() == 0, ErrorKind::kFormat, "trailing bytes after stream");
  return s;
}

}  // namespace ldc
