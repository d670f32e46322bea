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
#include <filesystem>
#include <string>
#include <vector>

#include "ldc/core/image.hpp"
#include "ldc/core/rng.hpp"

namespace ldc {

// Procedural training images: a base gradient plus layered soft shapes and
// sinusoidal textures with mild noise. Deterministic in the seed, so corpora
// are reproducible across machines.
inline ImageTensor synthetic_image(uint64_t seed, int height, int width) {
  Rng rng(Rng::mix(seed, 0xA11CEULL));
  ImageTensor img = ImageTensor::zeros(height, width);
  const double inv_h = 1.0 / std::max(1, height - 1);
  const double inv_w = 1.0 / std::max(1, width - 1);

  // Base: linear gradient between two random colors at a random angle.
  double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  double gx = std::cos(angle), gy = std::sin(angle);
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.05, 0.95);
    c1[c] = rng.uniform(0.05, 0.95);
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double u = 0.5 + 0.5 * (gx * (x * inv_w - 0.5) * 2.0 + gy * (y * inv_h - 0.5) * 2.0);
      u = clamp(u, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = c0[c] + (c1[c] - c0[c]) * u;
    }

  // Soft ellipses and rectangles, alpha-blended with a smooth edge.
  int shapes = 2 + static_cast<int>(rng.bounded(4));
  for (int s = 0; s < shapes; ++s) {
    bool ellipse = rng.uniform() < 0.6;
    double cx = rng.uniform(0.1, 0.9) * width;
    double cy = rng.uniform(0.1, 0.9) * height;
    double rx = rng.uniform(0.08, 0.35) * width;
    double ry = rng.uniform(0.08, 0.35) * height;
    double edge = rng.uniform(0.5, 3.0) + 0.02 * std::min(width, height);
    double col[3];
    for (int c = 0; c < 3; ++c) col[c] = rng.uniform(0.0, 1.0);
    double alpha = rng.uniform(0.5, 1.0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double d;
        if (ellipse) {
          double dx = (x - cx) / rx, dy = (y - cy) / ry;
          d = (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry);
        } else {
          double dx = std::abs(x - cx) - rx, dy = std::abs(y - cy) - ry;
          d = std::max(dx, dy);
        }
        double a = alpha * clamp(0.5 - d / edge, 0.0, 1.0);
        if (a <= 0) continue;
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = (1 - a) * img.at(c, y, x) + a * col[c];
      }
  }

  // Low-frequency sinusoidal texture on a random channel mix.
  int textures = static_cast<int>(rng.bounded(3));
  for (int t = 0; t < textures; ++t) {
    double fx = rng.uniform(1.0, 6.0) / width;
    double fy = rng.uniform(1.0, 6.0) / height;
    double phase = rng.uniform(0.0, 6.28318530717958647692);
    double amp = rng.uniform(0.02, 0.10);
    double mix[3];
    for (int c = 0; c < 3; ++c) mix[c] = rng.uniform(0.0, 1.0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double v = amp * std::sin(6.28318530717958647692 * (fx * x + fy * y) + phase);
        for (int c = 0; c < 3; ++c) img.at(c, y, x) += mix[c] * v;
      }
  }

  // Mild sensor-style noise.
  double noise = rng.uniform(0.0, 0.015);
  for (int64_t i = 0; i < img.chw().numel(); ++i) img.chw()[i] += noise * rng.normal();

  return img.clamped();
}

// Writes `count` images named img_00000.ppm, ... under `dir`.
inline std::vector<std::string> write_synthetic_corpus(const std::string& dir, int count,
                                                       int height, int width, uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  paths.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.ppm", i);
    std::string path = (std::filesystem::path(dir) / name).string();
    save_image(path, synthetic_image(Rng::mix(seed, static_cast<uint64_t>(i)), height, width));
    paths.push_back(path);
  }
  return paths;
}

inline std::vector<std::string> list_images(const std::string& dir) {
  std::vector<std::string> out;
  require(std::filesystem::is_directory(dir), ErrorKind::kIo, "not a directory: ", dir);
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    if (ext == ".ppm" || ext == ".png" || ext == ".pgm") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ldc
