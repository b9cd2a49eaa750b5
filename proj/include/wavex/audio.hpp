// include/wavex/audio.hpp

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

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "wavex/common.hpp"

namespace wavex {

inline constexpr int kCanonicalSampleRate = 16000;
inline constexpr int kCanonicalInputLen = 16384;

// Mono waveform, float32 amplitudes. Transforms that amplify clamp to [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kCanonicalSampleRate;

  Waveform() = default;
  Waveform(std::vector<float> s, int rate) : samples(std::move(s)), sample_rate(rate) {
    if (samples.empty()) throw PreconditionError("waveform must be non-empty");
    if (sample_rate <= 0) throw PreconditionError("sample rate must be positive");
  }

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return double(samples.size()) / sample_rate; }

  bool within_unit_range() const {
    return std::all_of(samples.begin(), samples.end(), [](float v) {
      return std::isfinite(v) && v >= -1.0f && v <= 1.0f;
    });
  }

  void clamp() {
    for (float& v : samples) v = std::clamp(v, -1.0f, 1.0f);
  }

  bool operator==(const Waveform&) const = default;
};

inline std::size_t random_window_offset(std::size_t len, std::size_t target_len, Rng& rng) {
  if (len <= target_len) return 0;
  std::uniform_int_distribution<std::size_t> dist(0, len - target_len);
  return dist(rng);
}

inline Waveform random_window(const Waveform& w, std::size_t target_len, Rng& rng) {
  WAVEX_REQUIRE(target_len >= 1, "random_window: target_len must be >= 1");
  std::vector<float> out(target_len, 0.0f);
  std::size_t off = random_window_offset(w.size(), target_len, rng);
  std::size_t n = std::min(target_len, w.size() - off);
  std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(off), n, out.begin());
  return Waveform(std::move(out), w.sample_rate);
}

inline Waveform random_window(const Waveform& w, std::size_t target_len, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return random_window(w, target_len, rng);
}

// ---------------------------------------------------------------------------
// Spectra

struct Spectrum {
  std::vector<double> magnitudes;  // floor(n/2)+1 bins
  double bin_hz = 0.0;
  std::size_t window_len = 0;

  double nyquist_hz() const { return bin_hz * double(window_len) / 2.0; }
};

// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(n));
  return w;
}

inline std::vector<std::complex<double>> real_dft(std::span<const double> x) {
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  return out;
}

inline Spectrum magnitude_spectrum(const Waveform& w, bool hann = false) {
  const std::size_t n = w.size();
  WAVEX_REQUIRE(n >= 2, "magnitude_spectrum: need at least 2 samples");
  std::vector<double> x(w.samples.begin(), w.samples.end());
  if (hann) {
    auto win = hann_window(n);
    for (std::size_t i = 0; i < n; ++i) x[i] *= win[i];
  }
  auto X = real_dft(x);
  Spectrum s;
  s.window_len = n;
  s.bin_hz = double(w.sample_rate) / double(n);
  s.magnitudes.resize(n / 2 + 1);
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) s.magnitudes[k] = std::abs(X[k]);
  return s;
}

// Time-domain energy implied by a one-sided magnitude spectrum (Parseval).
inline double spectral_energy(const Spectrum& s) {
  const std::size_t n = s.window_len;
  double e = 0.0;
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
    double m2 = s.magnitudes[k] * s.magnitudes[k];
    bool unpaired = (k == 0) || (n % 2 == 0 && k == n / 2);
    e += unpaired ? m2 : 2.0 * m2;
  }
  return e / double(n);
}

inline std::size_t peak_bin(const Spectrum& s) {
  return static_cast<std::size_t>(
      std::max_element(s.magnitudes.begin(), s.magnitudes.end()) - s.magnitudes.begin());
}

// ---------------------------------------------------------------------------
// Mel filterbank

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
  int n_filters = 0;
  double f_min = 0.0;
  double f_max = 0.0;
  std::size_t n_bins = 0;
  double bin_hz = 0.0;
  std::vector<std::vector<double>> weights;  // [n_filters][n_bins]

  // Triangles with centres equally spaced in mel between f_min and f_max.
  // Each filter is rescaled so its largest sampled weight is exactly 1; a
  // triangle narrower than one bin degenerates to its nearest bin.
  static MelFilterbank build(int n_filters, double f_min, double f_max, std::size_t n_bins,
                             double bin_hz) {
    WAVEX_REQUIRE(n_filters >= 1, "mel filterbank: n_filters must be positive");
    WAVEX_REQUIRE(n_bins >= 2 && bin_hz > 0.0, "mel filterbank: bad bin geometry");
    if (!(f_min >= 0.0 && f_max > f_min))
      throw ConfigError("mel filterbank: need 0 <= f_min < f_max");
    MelFilterbank fb;
    fb.n_filters = n_filters;
    fb.f_min = f_min;
    fb.f_max = f_max;
    fb.n_bins = n_bins;
    fb.bin_hz = bin_hz;
    const double m_lo = hz_to_mel(f_min), m_hi = hz_to_mel(f_max);
    std::vector<double> edges(n_filters + 2);
    for (int i = 0; i < n_filters + 2; ++i)
      edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * double(i) / double(n_filters + 1));
    fb.weights.assign(n_filters, std::vector<double>(n_bins, 0.0));
    for (int f = 0; f < n_filters; ++f) {
      const double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
      auto& w = fb.weights[f];
      double peak = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b) {
        double hz = double(b) * bin_hz;
        double v = 0.0;
        if (hz > lo && hz <= mid) v = (hz - lo) / (mid - lo);
        else if (hz > mid && hz < hi) v = (hi - hz) / (hi - mid);
        w[b] = v;
        peak = std::max(peak, v);
      }
      if (peak > 0.0) {
        for (double& v : w) v /= peak;
      } else {
        auto nearest = static_cast<std::size_t>(std::lround(mid / bin_hz));
        w[std::min(nearest, n_bins - 1)] = 1.0;
      }
    }
    return fb;
  }

  static MelFilterbank for_spectrum(int n_filters, const Spectrum& s, double f_min = 0.0,
                                    double f_max = -1.0) {
    if (f_max < 0.0) f_max = s.nyquist_hz();
    return build(n_filters, f_min, f_max, s.magnitudes.size(), s.bin_hz);
  }
};

inline std::vector<double> mel_project(const Spectrum& s, const MelFilterbank& fb) {
  if (fb.f_max > s.nyquist_hz() + 1e-9)
    throw ConfigError("mel_project: filterbank f_max above spectrum Nyquist");
  if (fb.n_bins != s.magnitudes.size() || std::abs(fb.bin_hz - s.bin_hz) > 1e-9 * s.bin_hz)
    throw ConfigError("mel_project: filterbank built for a different bin layout");
  std::vector<double> out(fb.n_filters, 0.0);
  for (int f = 0; f < fb.n_filters; ++f) {
    const auto& w = fb.weights[f];
    double acc = 0.0;
    for (std::size_t b = 0; b < fb.n_bins; ++b) acc += w[b] * s.magnitudes[b];
    out[f] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling: Kaiser-windowed sinc, 16 zero crossings per side.

struct ResampleKernel {
  static constexpr int kZeroCrossings = 16;
  static constexpr double kBeta = 8.555;
  static constexpr double kRolloff = 0.85;
};

inline double kaiser(double u, double beta) {
  if (std::abs(u) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) /
         std::cyl_bessel_i(0.0, beta);
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Resamples by `ratio` = out_rate / in_rate into exactly out_len samples.
// Samples outside the input are treated as zero.
inline std::vector<float> resample_ratio(std::span<const float> x, double ratio,
                                         std::size_t out_len) {
  WAVEX_REQUIRE(ratio > 0.0, "resample: ratio must be positive");
  const double cutoff = ResampleKernel::kRolloff * std::min(1.0, ratio);
  const double half_width = ResampleKernel::kZeroCrossings / cutoff;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<float> y(out_len, 0.0f);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double t = double(m) / ratio;
    auto k0 = static_cast<std::ptrdiff_t>(std::ceil(t - half_width));
    auto k1 = static_cast<std::ptrdiff_t>(std::floor(t + half_width));
    k0 = std::max<std::ptrdiff_t>(k0, 0);
    k1 = std::min<std::ptrdiff_t>(k1, n - 1);
    double acc = 0.0;
    for (std::ptrdiff_t k = k0; k <= k1; ++k) {
      const double tau = t - double(k);
      acc += x[k] * cutoff * sinc(cutoff * tau) *
             kaiser(tau / half_width, ResampleKernel::kBeta);
    }
    y[m] = static_cast<float>(acc);
  }
  return y;
}

inline Waveform resample(const Waveform& w, int new_rate) {
  WAVEX_REQUIRE(new_rate > 0, "resample: new_rate must be positive");
  if (new_rate == w.sample_rate) return w;
  const double ratio = double(new_rate) / double(w.sample_rate);
  auto out_len = static_cast<std::size_t>(std::llround(double(w.size()) * ratio));
  out_len = std::max<std::size_t>(out_len, 1);
  return Waveform(resample_ratio(w.samples, ratio, out_len), new_rate);
}

// Stretch or squeeze a signal to `out_len` samples, keeping its sample rate
// label. Used for pitch shifting and octave upsampling.
inline std::vector<float> resample_to_length(std::span<const float> x, std::size_t out_len) {
  WAVEX_REQUIRE(!x.empty() && out_len >= 1, "resample_to_length: empty input");
  if (out_len == x.size()) return std::vector<float>(x.begin(), x.end());
  return resample_ratio(x, double(out_len) / double(x.size()), out_len);
}

inline Waveform sine_wave(double freq_hz, std::size_t len, int sample_rate,
                          double amplitude = 1.0, double phase = 0.0) {
  std::vector<float> s(len);
  for (std::size_t i = 0; i < len; ++i)
    s[i] = static_cast<float>(
        amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * double(i) / sample_rate + phase));
  return Waveform(std::move(s), sample_rate);
}

}  // namespace wavex
