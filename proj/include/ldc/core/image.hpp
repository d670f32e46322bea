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

#include <png.h>

#include <cstdio>
#include <csetjmp>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/bytes.hpp"
#include "ldc/core/math.hpp"
#include "ldc/core/tensor.hpp"

namespace ldc {

// RGB image with values in [0, 1], stored channel-major (3 x H x W).
class ImageTensor {
 public:
  ImageTensor() = default;

  explicit ImageTensor(Tensor chw) : chw_(std::move(chw)) {
    require(chw_.ndim() == 3 && chw_.dim(0) == 3, ErrorKind::kValidation,
            "image tensor must be 3xHxW, got ", chw_.shape_str());
  }

  static ImageTensor zeros(int height, int width) {
    return ImageTensor(Tensor({3, height, width}));
  }

  bool defined() const { return chw_.defined(); }
  int height() const { return chw_.dim(1); }
  int width() const { return chw_.dim(2); }
  const Tensor& chw() const { return chw_; }
  Tensor& chw() { return chw_; }

  double at(int c, int y, int x) const {
    return chw_[(static_cast<int64_t>(c) * height() + y) * width() + x];
  }
  double& at(int c, int y, int x) {
    return chw_[(static_cast<int64_t>(c) * height() + y) * width() + x];
  }

  ImageTensor clamped() const {
    ImageTensor out(chw_.clone());
    for (int64_t i = 0; i < out.chw_.numel(); ++i)
      out.chw_[i] = clamp(out.chw_[i], 0.0, 1.0);
    return out;
  }

 private:
  Tensor chw_;
};

// 8-bit conversion uses round-half-away-from-zero so that writes are
// platform-stable for exact .5 values.
inline uint8_t to_u8(double v) {
  return static_cast<uint8_t>(clamp(round_half_away(v * 255.0), 0.0, 255.0));
}

inline std::vector<uint8_t> to_rgb8(const ImageTensor& img) {
  const int h = img.height(), w = img.width();
  std::vector<uint8_t> out(static_cast<size_t>(h) * w * 3);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out[i++] = to_u8(img.at(c, y, x));
  return out;
}

inline ImageTensor from_rgb8(const uint8_t* rgb, int h, int w) {
  ImageTensor img = ImageTensor::zeros(h, w);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = rgb[i++] / 255.0;
  return img;
}

namespace detail {

inline ImageTensor read_ppm(const std::vector<uint8_t>& data, const std::string& path) {
  size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < data.size()) {
      char ch = static_cast<char>(data[pos]);
      if (ch == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
        ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < data.size() && !isspace(data[pos])) ++pos;
    return std::string(reinterpret_cast<const char*>(data.data()) + start, pos - start);
  };
  std::string magic = next_token();
  require(magic == "P6" || magic == "P5", ErrorKind::kFormat, path, ": unsupported PNM magic ", magic);
  int w = std::stoi(next_token());
  int h = std::stoi(next_token());
  int maxval = std::stoi(next_token());
  require(maxval == 255, ErrorKind::kFormat, path, ": only 8-bit PNM supported");
  ++pos;  // single whitespace after header
  const int ch = (magic == "P6") ? 3 : 1;
  size_t need = static_cast<size_t>(w) * h * ch;
  require(data.size() - pos >= need, ErrorKind::kFormat, path, ": truncated PNM payload");
  ImageTensor img = ImageTensor::zeros(h, w);
  const uint8_t* p = data.data() + pos;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (ch == 3) {
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = p[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0;
      } else {
        double g = p[static_cast<size_t>(y) * w + x] / 255.0;
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = g;
      }
    }
  return img;
}

inline ImageTensor read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  require(fp != nullptr, ErrorKind::kIo, "cannot open for reading: ", path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::kInternal, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorKind::kFormat, path, ": PNG decode error");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  png_byte color = png_get_color_type(png, info);
  png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  std::vector<uint8_t> rows(static_cast<size_t>(h) * w * 3);
  std::vector<png_bytep> row_ptrs(h);
  for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = rows.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return from_rgb8(rows.data(), static_cast<int>(h), static_cast<int>(w));
}

inline void write_png(const std::string& path, const ImageTensor& img) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  require(fp != nullptr, ErrorKind::kIo, "cannot open for writing: ", path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorKind::kInternal, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorKind::kIo, path, ": PNG encode error");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> rgb = to_rgb8(img);
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(img.height()));
  for (int y = 0; y < img.height(); ++y)
    row_ptrs[static_cast<size_t>(y)] = rgb.data() + static_cast<size_t>(y) * img.width() * 3;
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline ImageTensor load_image(const std::string& path) {
  std::vector<uint8_t> head = read_file_bytes(path);
  require(head.size() >= 8, ErrorKind::kFormat, path, ": file too small to be an image");
  static const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (std::memcmp(head.data(), kPngSig, 8) == 0) return detail::read_png(path);
  if (head[0] == 'P' && (head[1] == '5' || head[1] == '6')) return detail::read_ppm(head, path);
  fail(ErrorKind::kFormat, path, ": unsupported image format (PNG and 8-bit PNM supported)");
}

inline void save_image(const std::string& path, const ImageTensor& img) {
  if (detail::ends_with(path, ".png")) {
    detail::write_png(path, img);
    return;
  }
  if (detail::ends_with(path, ".ppm")) {
    ByteWriter w;
    w.str(cat("P6\n", img.width(), " ", img.height(), "\n255\n"));
    w.bytes(to_rgb8(img));
    write_file_bytes(path, w.buffer());
    return;
  }
  fail(ErrorKind::kValidation, path, ": unsupported output extension (use .png or .ppm)");
}

// Reflect-pads on the bottom/right edges up to the next multiple of
// `multiple`. Reflection excludes the edge sample (abcd -> abcd|cb).
inline ImageTensor pad_reflect_to_multiple(const ImageTensor& img, int multiple) {
  const int h = img.height(), w = img.width();
  const int ph = (h % multiple == 0) ? h : h + multiple - h % multiple;
  const int pw = (w % multiple == 0) ? w : w + multiple - w % multiple;
  if (ph == h && pw == w) return img;
  require(ph - h < h && pw - w < w, ErrorKind::kValidation,
          "image ", w, "x", h, " too small to reflect-pad to a multiple of ", multiple);
  ImageTensor out = ImageTensor::zeros(ph, pw);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < ph; ++y) {
      int sy = y < h ? y : 2 * h - 2 - y;
      for (int x = 0; x < pw; ++x) {
        int sx = x < w ? x : 2 * w - 2 - x;
        out.at(c, y, x) = img.at(c, sy, sx);
      }
    }
  return out;
}

inline ImageTensor crop_top_left(const ImageTensor& img, int h, int w) {
  require(h <= img.height() && w <= img.width(), ErrorKind::kValidation, "crop larger than image");
  if (h == img.height() && w == img.width()) return img;
  ImageTensor out = ImageTensor::zeros(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
  return out;
}

inline ImageTensor crop_window(const ImageTensor& img, int y0, int x0, int h, int w) {
  require(y0 >= 0 && x0 >= 0 && y0 + h <= img.height() && x0 + w <= img.width(),
          ErrorKind::kValidation, "crop window out of bounds");
  ImageTensor out = ImageTensor::zeros(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
  return out;
}

}  // namespace ldc
