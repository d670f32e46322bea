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
#include <cstdio>
#include <filesystem>

#include "ldc/config.hpp"
#include "ldc/core/bytes.hpp"
#include "ldc/core/image.hpp"
#include "ldc/core/math.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/core/synthetic.hpp"
#include "ldc/core/tensor.hpp"

using namespace ldc;

TEST_CASE("round_half_away golden vectors", "[core]") {
  // Ties away from zero, the convention used by the quantizer and image writer.
  const double in[] = {0.5, 1.5, 2.5, -0.5, -1.5, -2.5, 0.49999, -0.49999, 3.0, -3.0, 0.0};
  const double out[] = {1, 2, 3, -1, -2, -3, 0, 0, 3, -3, 0};
  for (size_t i = 0; i < std::size(in); ++i) {
    CAPTURE(in[i]);
    CHECK(round_half_away(in[i]) == out[i]);
  }
}

TEST_CASE("normal_cdf matches libm erf", "[core]") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    double x = rng.uniform(-9.0, 9.0);
    double ref = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(std::abs(normal_cdf(x) - ref) < 1e-12);
  }
  CHECK(normal_cdf(0.0) == Catch::Approx(0.5).epsilon(1e-14));
  CHECK(normal_cdf(40.0) == 1.0);
  CHECK(normal_cdf(-40.0) == 0.0);
}

TEST_CASE("byte writer/reader round trip and overrun", "[core]") {
  ByteWriter w;
  w.u8(0xAB);
  w.u16(0x1234);
  w.u32(0xDEADBEEF);
  w.u64(0x0123456789ABCDEFULL);
  w.f32(1.5f);
  w.f64(-2.25);
  w.str("hi");
  ByteReader r(w.buffer());
  CHECK(r.u8() == 0xAB);
  CHECK(r.u16() == 0x1234);
  CHECK(r.u32() == 0xDEADBEEF);
  CHECK(r.u64() == 0x0123456789ABCDEFULL);
  CHECK(r.f32() == 1.5f);
  CHECK(r.f64() == -2.25);
  CHECK(r.str(2) == "hi");
  CHECK(r.remaining() == 0);
  CHECK_THROWS_AS(r.u8(), Error);
}

TEST_CASE("little-endian layout is bit-exact", "[core]") {
  ByteWriter w;
  w.u32(0x01020304);
  REQUIRE(w.buffer() == std::vector<uint8_t>{0x04, 0x03, 0x02, 0x01});
}

TEST_CASE("rng determinism and uniformity basics", "[core]") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(3);
  double s = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) s += r.uniform();
  CHECK(std::abs(s / n - 0.5) < 0.01);
  double sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    double v = r.normal();
    sn += v;
    sn2 += v * v;
  }
  CHECK(std::abs(sn / n) < 0.03);
  CHECK(std::abs(sn2 / n - 1.0) < 0.05);
}

TEST_CASE("config parses key=value with comments", "[core]") {
  Config c = Config::from_string("# comment\nsteps = 100\nlr=1e-3\nname = toy run\nflag = true\nlams = 1, 5, 10\n");
  CHECK(c.get_int("steps", 0) == 100);
  CHECK(c.get_double("lr", 0) == Catch::Approx(1e-3));
  CHECK(c.get_str("name", "") == "toy run");
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_doubles("lams", {}) == std::vector<double>{1, 5, 10});
  CHECK(c.get_int("missing", 7) == 7);
  CHECK_THROWS_AS(Config::from_string("nonsense line\n"), Error);
  CHECK_THROWS_AS(c.get_int("name", 0), Error);
}

TEST_CASE("image io round trip ppm and png", "[core]") {
  ImageTensor img = synthetic_image(11, 24, 17);
  auto tmp = std::filesystem::temp_directory_path();
  std::string ppm = (tmp / "ldc_test_img.ppm").string();
  std::string png = (tmp / "ldc_test_img.png").string();
  save_image(ppm, img);
  save_image(png, img);
  ImageTensor a = load_image(ppm);
  ImageTensor b = load_image(png);
  REQUIRE(a.height() == 24);
  REQUIRE(a.width() == 17);
  // Both formats are 8-bit; loads must agree bit-exactly with each other and
  // with quantized source values.
  CHECK(max_abs_diff(a.chw(), b.chw()) == 0.0);
  double max_err = 0;
  for (int64_t i = 0; i < img.chw().numel(); ++i)
    max_err = std::max(max_err, std::abs(img.chw()[i] - a.chw()[i]));
  CHECK(max_err <= 0.5 / 255.0 + 1e-12);
  std::remove(ppm.c_str());
  std::remove(png.c_str());
}

TEST_CASE("reflect padding pads to multiple and preserves content", "[core]") {
  ImageTensor img = synthetic_image(5, 30, 21);
  ImageTensor padded = pad_reflect_to_multiple(img, 8);
  REQUIRE(padded.height() == 32);
  REQUIRE(padded.width() == 24);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 21; ++x) CHECK(padded.at(1, y, x) == img.at(1, y, x));
  // Reflection excludes the edge: row 30 mirrors row 28.
  CHECK(padded.at(0, 30, 0) == img.at(0, 28, 0));
  CHECK(padded.at(0, 0, 21) == img.at(0, 0, 19));
  ImageTensor back = crop_top_left(padded, 30, 21);
  CHECK(max_abs_diff(back.chw(), img.chw()) == 0.0);
}

TEST_CASE("synthetic corpus is deterministic in the seed", "[core]") {
  ImageTensor a = synthetic_image(99, 16, 16);
  ImageTensor b = synthetic_image(99, 16, 16);
  ImageTensor c = synthetic_image(100, 16, 16);
  CHECK(max_abs_diff(a.chw(), b.chw()) == 0.0);
  CHECK(max_abs_diff(a.chw(), c.chw()) > 0.0);
  for (int64_t i = 0; i < a.chw().numel(); ++i) {
    CHECK(a.chw()[i] >= 0.0);
    CHECK(a.chw()[i] <= 1.0);
  }
}
