// include/wavex/augment.hpp

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

// Query-construction baselines: random amplification, pitch shifting,
// pairwise interpolation and Gaussian noise.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "wavex/audio.hpp"
#include "wavex/common.hpp"

namespace wavex {

enum class AugmentKind { amplify, pitch_shift, interpolate, gaussian_noise };

inline const char* to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::amplify: return "amplify";
    case AugmentKind::pitch_shift: return "pitch_shift";
    case AugmentKind::interpolate: return "interpolate";
    case AugmentKind::gaussian_noise: return "gaussian_noise";
  }
  return "?";
}

inline AugmentKind augment_kind_from_string(const std::string& s) {
  if (s == "amplify") return AugmentKind::amplify;
  if (s == "pitch_shift") return AugmentKind::pitch_shift;
  if (s == "interpolate") return AugmentKind::interpolate;
  if (s == "gaussian_noise") return AugmentKind::gaussian_noise;
  throw ConfigError("unknown augmentation kind: " + s);
}

struct AugmentSpec {
  AugmentKind kind = AugmentKind::amplify;
  double p = 1.0;
  double a = 0.2;
  double sigma = 1.0;
  double noise_std = 0.1;
  double max_semitones = 12.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augment: p must lie in [0,1]");
    if (kind == AugmentKind::amplify && !(a >= 0.0 && a <= 1.0))
      throw ConfigError("augment: a must lie in [0,1]");
    if (kind == AugmentKind::pitch_shift && !(sigma > 0.0))
      throw ConfigError("augment: sigma must be positive");
    if (kind == AugmentKind::gaussian_noise && !(noise_std > 0.0))
      throw ConfigError("augment: noise std must be positive");
  }
};

inline Waveform amplify(const Waveform& w, double factor) {
  Waveform out = w;
  for (float& v : out.samples) v = static_cast<float>(v * factor);
  out.clamp();
  return out;
}

inline Waveform random_amplify(const Waveform& w, double a, double p, Rng& rng) {
  WAVEX_REQUIRE(a >= 0.0 && a <= 1.0, "random_amplify: a must lie in [0,1]");
  std::bernoulli_distribution apply(p);
  if (!apply(rng)) return w;
  std::uniform_real_distribution<double> b(1.0 - a, 1.0 + a);
  return amplify(w, b(rng));
}

// ---------------------------------------------------------------------------
// Phase vocoder

struct VocoderParams {
  std::size_t n_fft = 512;
  std::size_t hop = 128;
};

// Duration change by 1/rate with pitch preserved. Output length is
// round(len / rate).
inline std::vector<float> time_stretch(std::span<const float> x, double rate,
                                       const VocoderParams& vp = {}) {
  WAVEX_REQUIRE(rate > 0.0, "time_stretch: rate must be positive");
  using cd = std::complex<double>;
  const std::size_t n_fft = vp.n_fft, hop = vp.hop, n_bins = n_fft / 2 + 1;
  const std::size_t pad = n_fft / 2;
  const auto window = hann_window(n_fft);

  std::vector<double> padded(x.size() + 2 * pad, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) padded[pad + i] = x[i];
  const std::size_t n_frames = 1 + (padded.size() >= n_fft ? (padded.size() - n_fft) / hop : 0);

  Eigen::FFT<double> fft;
  std::vector<std::vector<cd>> stft(n_frames + 1, std::vector<cd>(n_bins, cd(0.0, 0.0)));
  std::vector<double> frame(n_fft);
  std::vector<cd> spec;
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t i = 0; i < n_fft; ++i) {
      std::size_t j = f * hop + i;
      frame[i] = j < padded.size() ? padded[j] * window[i] : 0.0;
    }
    fft.fwd(spec, frame);
    for (std::size_t k = 0; k < n_bins; ++k) stft[f][k] = spec[k];
  }

  std::vector<double> advance(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    advance[k] = 2.0 * std::numbers::pi * double(hop) * double(k) / double(n_fft);

  std::vector<std::vector<cd>> out_frames;
  std::vector<double> phase_acc(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) phase_acc[k] = std::arg(stft[0][k]);
  for (double t = 0.0; t < double(n_frames); t += rate) {
    const auto i = static_cast<std::size_t>(t);
    const double alpha = t - double(i);
    std::vector<cd> col(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double mag = (1.0 - alpha) * std::abs(stft[i][k]) + alpha * std::abs(stft[i + 1][k]);
      col[k] = std::polar(mag, phase_acc[k]);
      double dphi = std::arg(stft[i + 1][k]) - std::arg(stft[i][k]) - advance[k];
      dphi -= 2.0 * std::numbers::pi * std::round(dphi / (2.0 * std::numbers::pi));
      phase_acc[k] += advance[k] + dphi;
    }
    out_frames.push_back(std::move(col));
  }

  const auto out_len = static_cast<std::size_t>(std::llround(double(x.size()) / rate));
  const std::size_t total = (out_frames.size() - 1) * hop + n_fft;
  std::vector<double> y(std::max(total, out_len + 2 * pad), 0.0), wsum(y.size(), 0.0);
  std::vector<cd> full(n_fft);
  std::vector<double> time;
  for (std::size_t f = 0; f < out_frames.size(); ++f) {
    for (std::size_t k = 0; k < n_bins; ++k) full[k] = out_frames[f][k];
    for (std::size_t k = n_bins; k < n_fft; ++k) full[k] = std::conj(out_frames[f][n_fft - k]);
    fft.inv(time, full);
    for (std::size_t i = 0; i < n_fft; ++i) {
      y[f * hop + i] += time[i] * window[i];
      wsum[f * hop + i] += window[i] * window[i];
    }
  }
  std::vector<float> out(out_len, 0.0f);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t j = i + pad;
    if (j < y.size() && wsum[j] > 1e-8) out[i] = static_cast<float>(y[j] / wsum[j]);
  }
  return out;
}

// Pitch shift by `semitones` with duration kept: time-stretch by
// 2^(-s/12), then resample back to the original length.
inline Waveform pitch_shift(const Waveform& w, double semitones, double max_semitones = 12.0) {
  WAVEX_REQUIRE(std::abs(semitones) <= max_semitones, "pitch_shift: shift exceeds cap");
  if (semitones == 0.0) return w;
  const double rate = std::pow(2.0, -semitones / 12.0);
  auto stretched = time_stretch(w.samples, rate);
  Waveform out(resample_to_length(stretched, w.size()), w.sample_rate);
  out.clamp();
  return out;
}

inline Waveform pitch_shift(const Waveform& w, double semitones, double p, Rng& rng,
                            double max_semitones = 12.0) {
  std::bernoulli_distribution apply(p);
  if (!apply(rng)) return w;
  return pitch_shift(w, semitones, max_semitones);
}

// Gaussian semitone draw, clipped to the cap.
inline Waveform random_pitch_shift(const Waveform& w, double sigma, double p, Rng& rng,
                                   double max_semitones = 12.0) {
  std::bernoulli_distribution apply(p);
  if (!apply(rng)) return w;
  std::normal_distribution<double> s(0.0, sigma);
  return pitch_shift(w, std::clamp(s(rng), -max_semitones, max_semitones), max_semitones);
}

// ---------------------------------------------------------------------------

inline Waveform interpolate(const Waveform& w1, const Waveform& w2, double lambda) {
  WAVEX_REQUIRE(w1.size() == w2.size() && w1.sample_rate == w2.sample_rate,
                "interpolate: waveforms must share length and sample rate");
  WAVEX_REQUIRE(lambda >= 0.0 && lambda <= 1.0, "interpolate: lambda must lie in [0,1]");
  std::vector<float> s(w1.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = static_cast<float>(lambda * w1.samples[i] + (1.0 - lambda) * w2.samples[i]);
  Waveform out(std::move(s), w1.sample_rate);
  out.clamp();
  return out;
}

inline Waveform interpolate(const Waveform& w1, const Waveform& w2, Rng& rng) {
  std::uniform_real_distribution<double> lambda(0.0, 1.0);
  return interpolate(w1, w2, lambda(rng));
}

inline Waveform gaussian_noise_query(std::size_t length, double stddev, Rng& rng,
                                     int sample_rate = kCanonicalSampleRate) {
  WAVEX_REQUIRE(stddev > 0.0, "gaussian_noise_query: std must be positive");
  WAVEX_REQUIRE(length >= 1, "gaussian_noise_query: length must be >= 1");
  std::normal_distribution<double> n(0.0, stddev);
  std::vector<float> s(length);
  for (float& v : s) v = static_cast<float>(std::clamp(n(rng), -1.0, 1.0));
  return Waveform(std::move(s), sample_rate);
}

// Builds one query per pool element (interpolation pairs each element with a
// random partner; noise ignores the pool contents but matches its shape).
inline std::vector<Waveform> augment_pool(const AugmentSpec& spec, const std::vector<Waveform>& pool,
                                          Rng& rng) {
  spec.validate();
  std::vector<Waveform> out;
  out.reserve(pool.size());
  std::uniform_int_distribution<std::size_t> pick(0, pool.empty() ? 0 : pool.size() - 1);
  for (const auto& w : pool) {
    switch (spec.kind) {
      case AugmentKind::amplify:
        out.push_back(random_amplify(w, spec.a, spec.p, rng));
        break;
      case AugmentKind::pitch_shift:
        out.push_back(random_pitch_shift(w, spec.sigma, spec.p, rng, spec.max_semitones));
        break;
      case AugmentKind::interpolate:
        out.push_back(interpolate(w, pool[pick(rng)], rng));
        break;
      case AugmentKind::gaussian_noise:
        out.push_back(gaussian_noise_query(w.size(), spec.noise_std, rng, w.sample_rate));
        break;
    }
  }
  return out;
}

}  // namespace wavex
