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
#include <cmath>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/bytes.hpp"
#include "ldc/eval/elo.hpp"

namespace ldc::eval {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y), e.g. (bpp, metric)
};

namespace detail {

inline const char* series_color(size_t i) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return kColors[i % 8];
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace detail

// Scatter/line chart (rate-distortion style) as a standalone SVG.
inline std::string rd_plot_svg(const std::string& title, const std::string& x_label,
                               const std::string& y_label,
                               const std::vector<PlotSeries>& series) {
  require(!series.empty(), ErrorKind::kValidation, "rd_plot: no series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  require(xmin <= xmax && ymin <= ymax, ErrorKind::kValidation, "rd_plot: no points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double W = 640, H = 440, L = 70, R = 190, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::string svg = cat("<svg xmlns='http://www.w3.org/2000/svg' width='", W, "' height='", H,
                        "' viewBox='0 0 ", W, " ", H, "'>\n",
                        "<rect width='100%' height='100%' fill='white'/>\n");
  svg += cat("<text x='", W / 2, "' y='24' text-anchor='middle' font-size='16'>", title,
             "</text>\n");
  svg += cat("<line x1='", L, "' y1='", H - B, "' x2='", W - R, "' y2='", H - B,
             "' stroke='black'/>\n");
  svg += cat("<line x1='", L, "' y1='", T, "' x2='", L, "' y2='", H - B, "' stroke='black'/>\n");
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4;
    double yv = ymin + (ymax - ymin) * i / 4;
    svg += cat("<text x='", px(xv), "' y='", H - B + 18,
               "' text-anchor='middle' font-size='11'>", detail::fmt(xv), "</text>\n");
    svg += cat("<text x='", L - 8, "' y='", py(yv) + 4,
               "' text-anchor='end' font-size='11'>", detail::fmt(yv), "</text>\n");
    svg += cat("<line x1='", px(xv), "' y1='", H - B, "' x2='", px(xv), "' y2='", H - B + 4,
               "' stroke='black'/>\n");
    svg += cat("<line x1='", L - 4, "' y1='", py(yv), "' x2='", L, "' y2='", py(yv),
               "' stroke='black'/>\n");
  }
  svg += cat("<text x='", (L + W - R) / 2, "' y='", H - 12,
             "' text-anchor='middle' font-size='13'>", x_label, "</text>\n");
  svg += cat("<text x='18' y='", (T + H - B) / 2,
             "' text-anchor='middle' font-size='13' transform='rotate(-90 18 ",
             (T + H - B) / 2, ")'>", y_label, "</text>\n");

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = detail::series_color(si);
    auto sorted = s.points;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() > 1) {
      std::string pts;
      for (auto [x, y] : sorted) pts += cat(px(x), ",", py(y), " ");
      svg += cat("<polyline points='", pts, "' fill='none' stroke='", color,
                 "' stroke-width='1.5'/>\n");
    }
    for (auto [x, y] : sorted)
      svg += cat("<circle cx='", px(x), "' cy='", py(y), "' r='3.5' fill='", color, "'/>\n");
    double ly = T + 18 * static_cast<double>(si);
    svg += cat("<rect x='", W - R + 14, "' y='", ly, "' width='12' height='12' fill='", color,
               "'/>\n");
    svg += cat("<text x='", W - R + 32, "' y='", ly + 10, "' font-size='12'>", s.label,
               "</text>\n");
  }
  svg += "</svg>\n";
  return svg;
}

// Elo box plot: box from q1 to q3 with the median line, per method.
inline std::string elo_box_plot_svg(const std::string& title, const EloResult& result) {
  require(!result.methods.empty(), ErrorKind::kValidation, "elo plot: no methods");
  double ymin = 1e300, ymax = -1e300;
  for (const auto& m : result.methods) {
    ymin = std::min(ymin, m.q1);
    ymax = std::max(ymax, m.q3);
  }
  double pad = std::max(1.0, (ymax - ymin) * 0.25);
  ymin -= pad;
  ymax += pad;
  const double W = 560, H = 420, L = 80, R = 30, T = 40, B = 60;
  const int n = static_cast<int>(result.methods.size());
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::string svg = cat("<svg xmlns='http://www.w3.org/2000/svg' width='", W, "' height='", H,
                        "' viewBox='0 0 ", W, " ", H, "'>\n",
                        "<rect width='100%' height='100%' fill='white'/>\n");
  svg += cat("<text x='", W / 2, "' y='24' text-anchor='middle' font-size='16'>", title,
             "</text>\n");
  svg += cat("<line x1='", L, "' y1='", T, "' x2='", L, "' y2='", H - B, "' stroke='black'/>\n");
  svg += cat("<line x1='", L, "' y1='", H - B, "' x2='", W - R, "' y2='", H - B,
             "' stroke='black'/>\n");
  for (int i = 0; i <= 4; ++i) {
    double yv = ymin + (ymax - ymin) * i / 4;
    svg += cat("<text x='", L - 8, "' y='", py(yv) + 4, "' text-anchor='end' font-size='11'>",
               detail::fmt(yv), "</text>\n");
    svg += cat("<line x1='", L - 4, "' y1='", py(yv), "' x2='", L, "' y2='", py(yv),
               "' stroke='black'/>\n");
  }
  svg += cat("<text x='20' y='", (T + H - B) / 2,
             "' text-anchor='middle' font-size='13' transform='rotate(-90 20 ", (T + H - B) / 2,
             ")'>Elo rating</text>\n");
  const double slot = (W - L - R) / n;
  for (int i = 0; i < n; ++i) {
    const auto& m = result.methods[static_cast<size_t>(i)];
    const char* color = detail::series_color(static_cast<size_t>(i));
    double cx = L + slot * (i + 0.5);
    double bw = std::min(60.0, slot * 0.5);
    svg += cat("<rect x='", cx - bw / 2, "' y='", py(m.q3), "' width='", bw, "' height='",
               py(m.q1) - py(m.q3), "' fill='", color, "' fill-opacity='0.35' stroke='", color,
               "'/>\n");
    svg += cat("<line x1='", cx - bw / 2, "' y1='", py(m.median), "' x2='", cx + bw / 2,
               "' y2='", py(m.median), "' stroke='", color, "' stroke-width='2.5'/>\n");
    svg += cat("<text x='", cx, "' y='", H - B + 20, "' text-anchor='middle' font-size='12'>",
               m.method, "</text>\n");
    svg += cat("<text x='", cx, "' y='", H - B + 36, "' text-anchor='middle' font-size='10'>",
               detail::fmt(m.median), "</text>\n");
  }
  svg += "</svg>\n";
  return svg;
}

inline void write_plot(const std::string& path, const std::string& svg) {
  write_file_text(path, svg);
}

}  // namespace ldc::eval
