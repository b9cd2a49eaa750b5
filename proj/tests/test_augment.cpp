// tests/test_augment.cpp

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

#include <gtest/gtest.h>

#include "wavex/augment.hpp"

namespace wavex {
namespace {

Waveform noise(std::size_t n, std::uint64_t seed, double amp = 0.5) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<float> s(n);
  for (auto& v : s) v = static_cast<float>(u(rng));
  return Waveform(std::move(s), kCanonicalSampleRate);
}

double centroid_hz(const Waveform& w) {
  auto s = magnitude_spectrum(w, true);
  double num = 0, den = 0;
  for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
    const double p = s.magnitudes[k] * s.magnitudes[k];
    num += p * k * s.bin_hz;
    den += p;
  }
  return num / den;
}

TEST(Amplify, ProbabilityZeroIsIdentity) {
  auto w = noise(100, 1);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(random_amplify(w, 0.5, 0.0, rng), w);
}

TEST(Amplify, FixedFactorScales) {
  auto out = amplify(Waveform({.1f, -.2f}, 16000), 1.2);
  EXPECT_NEAR(out.samples[0], 0.12, 1e-7);
  EXPECT_NEAR(out.samples[1], -0.24, 1e-7);
}

TEST(Amplify, ZeroHalfRangeIsIdentityForAnyP) {
  auto w = noise(64, 2);
  Rng rng(3);
  for (double p : {0.0, 0.3, 1.0}) EXPECT_EQ(random_amplify(w, 0.0, p, rng), w);
}

TEST(Amplify, FactorWithinRangeAndClamped) {
  auto w = noise(64, 4, 0.95);
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    auto out = random_amplify(w, 0.2, 1.0, rng);
    EXPECT_TRUE(out.within_unit_range());
    // Recover b from the largest unclamped sample.
    std::size_t k = 0;
    for (std::size_t j = 0; j < w.size(); ++j)
      if (std::abs(w.samples[j]) < 0.5 && std::abs(w.samples[j]) > std::abs(w.samples[k])) k = j;
    const double b = out.samples[k] / w.samples[k];
    EXPECT_GE(b, 0.8 - 1e-6);
    EXPECT_LE(b, 1.2 + 1e-6);
  }
}

TEST(PitchShift, ZeroIsIdentity) {
  auto w = noise(500, 6);
  auto out = pitch_shift(w, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(out.samples[i], w.samples[i], 1e-6);
}

TEST(PitchShift, OctaveUpMovesPeak) {
  auto w = sine_wave(220.0, 16000, 16000, 0.5);
  auto out = pitch_shift(w, 12.0);
  EXPECT_EQ(out.size(), w.size());
  auto s = magnitude_spectrum(out, true);
  EXPECT_NEAR(double(peak_bin(s)) * s.bin_hz, 440.0, s.bin_hz);
}

TEST(PitchShift, CentroidMovesByFactor) {
  for (double semis : {-5.0, -2.0, 3.0, 7.0}) {
    auto w = sine_wave(300.0, 16000, 16000, 0.5);
    auto out = pitch_shift(w, semis);
    const double want = 300.0 * std::pow(2.0, semis / 12.0);
    EXPECT_NEAR(centroid_hz(out), want, 0.02 * want) << semis;
    EXPECT_LE(std::abs(double(out.size()) - double(w.size())), 1.0);
  }
}

TEST(PitchShift, CapIsEnforced) {
  auto w = noise(100, 7);
  EXPECT_THROW(pitch_shift(w, 13.0), PreconditionError);
  EXPECT_NO_THROW(pitch_shift(w, 13.0, 24.0));
}

TEST(Interpolate, EndpointsAndCancellation) {
  auto a = noise(128, 8), b = noise(128, 9);
  EXPECT_EQ(interpolate(a, b, 1.0), a);
  std::vector<float> neg(a.samples);
  for (auto& v : neg) v = -v;
  auto z = interpolate(a, Waveform(neg, a.sample_rate), 0.5);
  for (float v : z.samples) EXPECT_EQ(v, 0.0f);
}

TEST(Interpolate, MatchesElementwiseOracle) {
  auto a = noise(300, 10, 0.9), b = noise(300, 11, 0.9);
  for (double lambda : {0.0, 0.13, 0.5, 0.77}) {
    auto out = interpolate(a, b, lambda);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double want = std::clamp(lambda * a.samples[i] + (1 - lambda) * b.samples[i], -1.0, 1.0);
      EXPECT_NEAR(out.samples[i], want, 1e-7);  // float storage
    }
  }
}

TEST(Interpolate, IsSymmetric) {
  auto a = noise(200, 12), b = noise(200, 13);
  for (double lambda : {0.2, 0.6}) {
    auto x = interpolate(a, b, lambda), y = interpolate(b, a, 1.0 - lambda);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(x.samples[i], y.samples[i], 1e-7);
  }
}

TEST(Interpolate, MismatchedLengthsThrow) {
  EXPECT_THROW(interpolate(noise(10, 1), noise(11, 2), 0.5), PreconditionError);
}

TEST(GaussianNoise, Moments) {
  Rng rng(14);
  auto w = gaussian_noise_query(16384, 0.1, rng);
  double mean = 0, var = 0;
  for (float v : w.samples) mean += v;
  mean /= double(w.size());
  for (float v : w.samples) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(var / double(w.size())), 0.1, 0.01);
}

TEST(GaussianNoise, TinyStdStaysNearZero) {
  Rng rng(15);
  const double sd = 1e-6;
  for (float v : gaussian_noise_query(4096, sd, rng).samples) EXPECT_LE(std::abs(v), 5 * sd + 1e-12);
  EXPECT_THROW(gaussian_noise_query(10, 0.0, rng), PreconditionError);
}

TEST(AugmentPool, PreservesLengthAndRange) {
  std::vector<Waveform> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(noise(1024, 20 + i, 0.9));
  for (auto kind : {AugmentKind::amplify, AugmentKind::pitch_shift, AugmentKind::interpolate, AugmentKind::gaussian_noise}) {
    AugmentSpec spec;
    spec.kind = kind;
    spec.a = 0.5;
    Rng rng(31);
    auto out = augment_pool(spec, pool, rng);
    ASSERT_EQ(out.size(), pool.size());
    for (const auto& w : out) {
      EXPECT_LE(std::abs(double(w.size()) - 1024.0), 1.0) << to_string(kind);
      EXPECT_TRUE(w.within_unit_range()) << to_string(kind);
    }
  }
}

TEST(AugmentSpec, ValidatesRanges) {
  AugmentSpec s;
  s.p = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.a = -0.1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.kind = AugmentKind::pitch_shift;
  s.sigma = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(augment_kind_from_string("interpolate"), AugmentKind::interpolate);
}

}  // namespace
}  // namespace wavex
