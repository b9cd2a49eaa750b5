// tests/oracles.hpp

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

// Reference implementations used only by tests. Each one takes the slow,
// obvious route so it shares no code path with the library it checks.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace wavex::oracle {

// |X_k| for k = 0..n/2 by direct summation.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * (long double)(k * t % n) / (long double)n;
      re += x[t] * std::cos(ang);
      im += x[t] * std::sin(ang);
    }
    out[k] = static_cast<double>(std::sqrt(re * re + im * im));
  }
  return out;
}

// Dense [n_filters x n_bins] triangular mel matrix, each row scaled to a
// sampled peak of one. Rows with no bin inside the triangle put a single 1
// on the bin nearest the centre.
inline Eigen::MatrixXd mel_matrix(int n_filters, double f_min, double f_max, std::size_t n_bins, double bin_hz) {
  auto to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_filters, Eigen::Index(n_bins));
  const double lo_mel = to_mel(f_min), step = (to_mel(f_max) - lo_mel) / (n_filters + 1);
  for (int f = 0; f < n_filters; ++f) {
    const double a = to_hz(lo_mel + step * f), c = to_hz(lo_mel + step * (f + 1)), b = to_hz(lo_mel + step * (f + 2));
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double hz = k * bin_hz;
      double v = 0.0;
      if (hz > a && hz <= c) v = (hz - a) / (c - a);
      if (hz > c && hz < b) v = (b - hz) / (b - c);
      m(f, Eigen::Index(k)) = v;
    }
    const double peak = m.row(f).maxCoeff();
    if (peak > 0) m.row(f) /= peak;
    else m(f, std::min<Eigen::Index>(Eigen::Index(std::lround(c / bin_hz)), Eigen::Index(n_bins) - 1)) = 1.0;
  }
  return m;
}

// Retention under per-label caps, one label at a time in arrival order.
inline std::vector<bool> threshold_fold(const std::vector<int>& labels, const std::vector<std::int64_t>& caps) {
  std::map<int, std::int64_t> seen;
  std::vector<bool> keep;
  for (int l : labels) {
    const bool ok = seen[l] < caps[std::size_t(l)];
    if (ok) ++seen[l];
    keep.push_back(ok);
  }
  return keep;
}

}  // namespace wavex::oracle
