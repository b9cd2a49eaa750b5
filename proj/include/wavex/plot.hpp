// include/wavex/plot.hpp

// Copyright 2026 The wavex Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Static figures: a PNG raster (no text; axes and gridlines only) plus the
// CSV it was drawn from, so every number in a figure is recoverable.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "wavex/common.hpp"

namespace wavex::plot {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

using Rgb = std::array<unsigned char, 3>;

inline Rgb palette(std::size_t i) {
  static constexpr Rgb colors[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                   {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
  return colors[i % 8];
}

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(std::size_t(w) * h * 3, 255) {}

  int width() const { return w_; }
  int height() const { return h_; }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[(std::size_t(y) * w_ + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void line(double x0, double y0, double x1, double y1, Rgb c) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = double(i) / steps;
      set(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
  }

  void fill(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void write_png(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      std::fclose(f);
      throw IoError("png encoding failed for " + path.string());
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, w_, h_, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h_; ++y)
      png_write_row(png, const_cast<png_bytep>(&px_[std::size_t(y) * w_ * 3]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
  }

 private:
  int w_, h_;
  std::vector<unsigned char> px_;
};

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  int left = 50, right = 20, top = 20, bottom = 40;
  int w, h;

  double px(double x) const { return left + (x - x_lo) / (x_hi - x_lo) * (w - left - right); }
  double py(double y) const { return h - bottom - (y - y_lo) / (y_hi - y_lo) * (h - top - bottom); }
};

inline Frame frame_for(const std::vector<Series>& series, int w, int h, bool y_from_zero) {
  double xl = 1e300, xh = -1e300, yl = y_from_zero ? 0.0 : 1e300, yh = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) xl = std::min(xl, v), xh = std::max(xh, v);
    for (double v : s.y)
      if (std::isfinite(v)) yl = std::min(yl, v), yh = std::max(yh, v);
  }
  if (!(xh > xl)) xh = xl + 1.0;
  if (!(yh > yl)) yh = yl + 1.0;
  const double pad = 0.05 * (yh - yl);
  return {xl, xh, y_from_zero ? yl : yl - pad, yh + pad, 50, 20, 20, 40, w, h};
}

inline void draw_axes(Canvas& c, const Frame& f) {
  const Rgb grid{225, 225, 225}, axis{0, 0, 0};
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y_lo + (f.y_hi - f.y_lo) * i / 4.0;
    c.line(f.left, f.py(y), f.w - f.right, f.py(y), grid);
  }
  c.line(f.left, f.h - f.bottom, f.w - f.right, f.h - f.bottom, axis);
  c.line(f.left, f.top, f.left, f.h - f.bottom, axis);
}

inline void write_series_csv(const std::filesystem::path& path, const std::vector<Series>& series,
                             const std::string& x_name = "x", const std::string& y_name = "y") {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "series," << x_name << ',' << y_name << '\n';
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) out << s.name << ',' << s.x[i] << ',' << s.y[i] << '\n';
}

// Writes `<stem>.png` and `<stem>.csv`.
inline void line_plot(const std::filesystem::path& stem, const std::vector<Series>& series,
                      const std::string& x_name = "x", const std::string& y_name = "y", int w = 640, int h = 400) {
  Canvas c(w, h);
  const auto f = frame_for(series, w, h, false);
  draw_axes(c, f);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    for (std::size_t i = 1; i < s.x.size(); ++i)
      c.line(f.px(s.x[i - 1]), f.py(s.y[i - 1]), f.px(s.x[i]), f.py(s.y[i]), palette(k));
    if (s.x.size() == 1) c.fill(int(f.px(s.x[0])) - 2, int(f.py(s.y[0])) - 2, int(f.px(s.x[0])) + 2, int(f.py(s.y[0])) + 2, palette(k));
  }
  auto png = stem;
  png += ".png";
  auto csv = stem;
  csv += ".csv";
  c.write_png(png);
  write_series_csv(csv, series, x_name, y_name);
}

// Grouped bars: one group per x position, one bar per series.
inline void bar_plot(const std::filesystem::path& stem, const std::vector<Series>& series,
                     const std::string& x_name = "x", const std::string& y_name = "y", int w = 640, int h = 400) {
  Canvas c(w, h);
  auto f = frame_for(series, w, h, true);
  f.x_lo -= 0.5;
  f.x_hi += 0.5;
  draw_axes(c, f);
  const double slot = (f.px(1.0) - f.px(0.0)) * 0.8 / std::max<std::size_t>(1, series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double x0 = f.px(s.x[i]) - slot * series.size() / 2.0 + slot * k;
      c.fill(int(x0), int(f.py(0.0)), int(x0 + slot) - 1, int(f.py(s.y[i])), palette(k));
    }
  }
  auto png = stem;
  png += ".png";
  auto csv = stem;
  csv += ".csv";
  c.write_png(png);
  write_series_csv(csv, series, x_name, y_name);
}

}  // namespace wavex::plot
