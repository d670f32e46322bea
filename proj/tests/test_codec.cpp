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

#include <filesystem>

#include "ldc/codec.hpp"
#include "ldc/core/synthetic.hpp"

using namespace ldc;

namespace {

CodecConfig tiny_cfg() {
  CodecConfig cfg;
  cfg.vae_widths = {4, 6, 8};
  cfg.denoiser_width = 8;
  cfg.denoiser_blocks = 1;
  cfg.denoiser_time_embed = 8;
  cfg.pphi_widths = {8, 8, 8, 8};
  cfg.entropy_width = 8;
  cfg.hyper_channels = 2;
  return cfg;
}

}  // namespace

TEST_CASE("encode/decode round trip over the supported size grid", "[codec]") {
  CodecContext ctx(tiny_cfg());
  int case_idx = 0;
  for (auto [h, w] : {std::pair{128, 128}, std::pair{64, 96}, std::pair{30, 22},
                      std::pair{129, 95}, std::pair{40, 17}}) {
    CAPTURE(h, w);
    ImageTensor img = synthetic_image(static_cast<uint64_t>(100 + case_idx++), h, w);
    auto enc = ctx.encode(img, 5.0);
    CHECK(enc.bpp > 0);
    CHECK(enc.header.orig_height == static_cast<uint32_t>(h));
    CHECK(enc.header.orig_width == static_cast<uint32_t>(w));
    auto dec = ctx.decode(enc.bytes);
    CHECK(dec.image.height() == h);
    CHECK(dec.image.width() == w);
    for (int64_t i = 0; i < dec.image.chw().numel(); ++i) {
      REQUIRE(dec.image.chw()[i] >= 0.0);
      REQUIRE(dec.image.chw()[i] <= 1.0);
    }
  }
}

TEST_CASE("decode runs exactly t backbone steps and is deterministic", "[codec]") {
  CodecContext ctx(tiny_cfg());
  ImageTensor img = synthetic_image(7, 48, 48);
  auto enc = ctx.encode(img, 10.0);
  // Header timestep equals the discretized predicted tau.
  Tensor y = encode_image(ctx.vae(), pad_reflect_to_multiple(img, 8));
  PredictedParams p = ctx.pphi().predict_params(y, RateCondition(10.0));
  CHECK(enc.timestep == timestep_to_discrete(p.tau, ctx.schedule().t_max()));
  CHECK(enc.header.timestep == enc.timestep);

  auto dec1 = ctx.decode(enc.bytes);
  auto dec2 = ctx.decode(enc.bytes);
  CHECK(dec1.backbone_calls == dec1.timestep);
  CHECK(dec2.backbone_calls == dec2.timestep);
  CHECK(max_abs_diff(dec1.image.chw(), dec2.image.chw()) == 0.0);
}

TEST_CASE("encode is deterministic for fixed inputs", "[codec]") {
  CodecContext ctx(tiny_cfg());
  ImageTensor img = synthetic_image(8, 40, 40);
  auto a = ctx.encode(img, 1.0);
  auto b = ctx.encode(img, 1.0);
  CHECK(a.bytes == b.bytes);
  CHECK(a.lambda_extrapolated == false);
  auto c = ctx.encode(img, 3.3);
  CHECK(c.lambda_extrapolated == true);
  CHECK(c.header.lambda_index == kCustomLambdaIndex);
}

TEST_CASE("forced t=0 header gives a pure VAE round trip", "[codec]") {
  CodecContext ctx(tiny_cfg());
  ImageTensor img = synthetic_image(9, 32, 32);
  auto enc = ctx.encode(img, 5.0);
  CompressedStream s = parse_stream(enc.bytes);
  s.header.timestep = 0;
  auto dec = ctx.decode(serialize_stream(s));
  CHECK(dec.timestep == 0);
  CHECK(dec.backbone_calls == 0);
  // Matches dequantize -> VAE decode directly.
  QuantizedLatent z = quantize(encode_image(ctx.vae(), img),
                               QuantParams{s.header.gamma_log_scale, s.header.gamma_offset});
  Tensor y_t = dequantize(z, QuantParams{s.header.gamma_log_scale, s.header.gamma_offset});
  ImageTensor direct = decode_latent(ctx.vae(), y_t);
  CHECK(max_abs_diff(direct.chw(), dec.image.chw()) == 0.0);
}

TEST_CASE("tampered payload byte raises a coder error, no crash", "[codec]") {
  CodecContext ctx(tiny_cfg());
  ImageTensor img = synthetic_image(10, 32, 32);
  auto enc = ctx.encode(img, 5.0);
  auto bytes = enc.bytes;
  bytes[bytes.size() - 3] ^= 0x10;  // inside the main payload
  CHECK_THROWS_AS(ctx.decode(bytes), Error);
}

TEST_CASE("checkpoint save/load round trip preserves streams", "[codec]") {
  auto dir = (std::filesystem::temp_directory_path() / "ldc_test_ckpt").string();
  ImageTensor img = synthetic_image(11, 40, 24);
  std::vector<uint8_t> bytes_a;
  {
    CodecContext ctx(tiny_cfg());
    bytes_a = ctx.encode(img, 20.0).bytes;
    ctx.save(dir);
  }
  CodecContext loaded = CodecContext::load(dir);
  auto bytes_b = loaded.encode(img, 20.0).bytes;
  CHECK(bytes_a == bytes_b);
  auto dec = loaded.decode(bytes_a);
  CHECK(dec.image.height() == 40);
  std::filesystem::remove_all(dir);
}

TEST_CASE("decode rejects streams from a mismatched context", "[codec]") {
  CodecContext ctx(tiny_cfg());
  ImageTensor img = synthetic_image(12, 32, 32);
  auto enc = ctx.encode(img, 5.0);

  CodecConfig other = tiny_cfg();
  other.t_max = 500;
  CodecContext ctx2(other);
  CHECK_THROWS_AS(ctx2.decode(enc.bytes), Error);
}

TEST_CASE("memory cap refuses oversized images with guidance", "[codec]") {
  CodecConfig cfg = tiny_cfg();
  cfg.max_pixels = 32 * 32;
  CodecContext ctx(cfg);
  ImageTensor img = synthetic_image(13, 48, 48);
  try {
    ctx.encode(img, 5.0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    CHECK(std::string(e.what()).find("max_pixels") != std::string::npos);
  }
}

TEST_CASE("codec config round trips through plain-text form", "[codec]") {
  CodecConfig cfg = tiny_cfg();
  cfg.context_model = true;
  cfg.rescale_latent_for_denoise = true;
  CodecConfig back = CodecConfig::from_config(
      Config::from_string(cfg.to_config().to_string()));
  CHECK(back.vae_widths == cfg.vae_widths);
  CHECK(back.pphi_widths == cfg.pphi_widths);
  CHECK(back.context_model == cfg.context_model);
  CHECK(back.rescale_latent_for_denoise == cfg.rescale_latent_for_denoise);
  CHECK(back.t_max == cfg.t_max);
  CHECK(back.max_pixels == cfg.max_pixels);
}
