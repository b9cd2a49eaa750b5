// tests/test_audio.cpp

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

#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wavex/audio.hpp"
#include "wavex/audio_io.hpp"

namespace wavex {
namespace {

Waveform noise(std::size_t n, std::uint64_t seed, double amp = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<float> s(n);
  for (auto& v : s) v = static_cast<float>(u(rng));
  return Waveform(std::move(s), kCanonicalSampleRate);
}

TEST(Waveform, RejectsEmptyAndBadRate) {
  EXPECT_THROW(Waveform({}, 16000), PreconditionError);
  EXPECT_THROW(Waveform({0.1f}, 0), PreconditionError);
}

TEST(RandomWindow, EqualLengthIsIdentity) {
  Waveform w({.1f, .2f, .3f, .4f, .5f}, 16000);
  EXPECT_EQ(random_window(w, 5, std::uint64_t{7}).samples, w.samples);
}

TEST(RandomWindow, ShortInputIsZeroPadded) {
  Waveform w({.1f, .2f, .3f}, 16000);
  const std::vector<float> want{.1f, .2f, .3f, 0.f, 0.f};
  EXPECT_EQ(random_window(w, 5, std::uint64_t{3}).samples, want);
}

TEST(RandomWindow, AlwaysTargetLength) {
  Rng rng(11);
  for (std::size_t len : {1u, 7u, 100u, 1000u})
    for (std::size_t target : {1u, 5u, 100u, 2048u}) {
      auto w = noise(len, len * 31 + target);
      EXPECT_EQ(random_window(w, target, rng).size(), target);
    }
}

TEST(RandomWindow, OffsetsAreUniform) {
  // 10^4 draws over 11 offsets; chi-square against uniform, p > 0.01 means
  // statistic below 23.21 for 10 degrees of freedom.
  const std::size_t len = 16000, target = 15990, n_off = len - target + 1;
  Rng rng(2024);
  std::vector<int> counts(n_off, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[random_window_offset(len, target, rng)];
  const double expect = double(draws) / n_off;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  EXPECT_LT(chi2, 23.21);
}

TEST(RandomWindow, SliceIsContiguous) {
  auto w = noise(500, 5);
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    auto r = random_window(w, 64, rng);
    auto it = std::search(w.samples.begin(), w.samples.end(), r.samples.begin(), r.samples.end());
    EXPECT_NE(it, w.samples.end());
  }
}

TEST(MagnitudeSpectrum, TooShortThrows) {
  EXPECT_THROW(magnitude_spectrum(Waveform({0.5f}, 16000)), PreconditionError);
}

TEST(MagnitudeSpectrum, ZeroInputIsZero) {
  auto s = magnitude_spectrum(Waveform(std::vector<float>(64, 0.f), 16000));
  EXPECT_EQ(s.magnitudes.size(), 33u);
  for (double m : s.magnitudes) EXPECT_EQ(m, 0.0);
}

TEST(MagnitudeSpectrum, BinCenteredToneConcentrates) {
  const std::size_t n = 256;
  const int k = 17;
  auto w = sine_wave(k * 16000.0 / n, n, 16000, 0.8);
  auto s = magnitude_spectrum(w);
  EXPECT_EQ(peak_bin(s), std::size_t(k));
  const double total = spectral_energy(s);
  const double peak = 2.0 * s.magnitudes[k] * s.magnitudes[k] / double(n);
  EXPECT_GE(peak / total, 0.99);
}

TEST(MagnitudeSpectrum, MatchesBruteForceDft) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng() % 255;
    auto w = noise(n, rng());
    auto s = magnitude_spectrum(w);
    auto ref = oracle::dft_magnitudes(std::vector<double>(w.samples.begin(), w.samples.end()));
    ASSERT_EQ(s.magnitudes.size(), ref.size());
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.magnitudes[k], ref[k], 1e-6) << "n=" << n;
  }
}

TEST(MagnitudeSpectrum, ParsevalHoldsUnwindowed) {
  for (std::size_t n : {2u, 3u, 64u, 255u, 1000u}) {
    auto w = noise(n, n);
    double e = 0.0;
    for (float v : w.samples) e += double(v) * v;
    EXPECT_NEAR(spectral_energy(magnitude_spectrum(w)), e, 1e-6 * e);
  }
}

TEST(MelFilterbank, TrianglesPeakAtOneAndAreNonEmpty) {
  auto fb = MelFilterbank::build(10, 0.0, 8000.0, 513, 16000.0 / 1024);
  for (const auto& w : fb.weights) {
    EXPECT_DOUBLE_EQ(*std::max_element(w.begin(), w.end()), 1.0);
    EXPECT_GE(*std::min_element(w.begin(), w.end()), 0.0);
  }
}

TEST(MelFilterbank, CentresEquallySpacedInMel) {
  auto fb = MelFilterbank::build(10, 0.0, 8000.0, 8193, 16000.0 / 16384);
  std::vector<double> centres;
  for (const auto& w : fb.weights) centres.push_back(hz_to_mel(fb.bin_hz * double(std::max_element(w.begin(), w.end()) - w.begin())));
  for (std::size_t i = 2; i < centres.size(); ++i)
    EXPECT_NEAR(centres[i] - centres[i - 1], centres[1] - centres[0], 2.0);
}

TEST(MelFilterbank, BadRangeIsConfigError) {
  EXPECT_THROW(MelFilterbank::build(10, 100.0, 50.0, 33, 250.0), ConfigError);
}

TEST(MelProject, FmaxAboveNyquistIsConfigError) {
  auto s = magnitude_spectrum(noise(64, 1));
  auto fb = MelFilterbank::build(10, 0.0, 9000.0, s.magnitudes.size(), s.bin_hz);
  EXPECT_THROW(mel_project(s, fb), ConfigError);
}

TEST(MelProject, ZeroAndOnesSpectra) {
  Spectrum s{std::vector<double>(129, 0.0), 16000.0 / 256, 256};
  auto fb = MelFilterbank::for_spectrum(10, s);
  for (double v : mel_project(s, fb)) EXPECT_EQ(v, 0.0);
  std::fill(s.magnitudes.begin(), s.magnitudes.end(), 1.0);
  auto out = mel_project(s, fb);
  for (int f = 0; f < 10; ++f)
    EXPECT_NEAR(out[f], std::accumulate(fb.weights[f].begin(), fb.weights[f].end(), 0.0), 1e-12);
}

TEST(MelProject, MatchesDenseOracle) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (std::size_t n_bins : {33u, 129u, 513u}) {
    Spectrum s{std::vector<double>(n_bins), 8000.0 / double(n_bins - 1), 2 * (n_bins - 1)};
    for (auto& m : s.magnitudes) m = u(rng);
    auto fb = MelFilterbank::for_spectrum(10, s);
    const auto dense = oracle::mel_matrix(10, 0.0, s.nyquist_hz(), n_bins, s.bin_hz);
    const Eigen::VectorXd want = dense * Eigen::Map<const Eigen::VectorXd>(s.magnitudes.data(), Eigen::Index(n_bins));
    auto got = mel_project(s, fb);
    for (int f = 0; f < 10; ++f) EXPECT_NEAR(got[f], want[f], 1e-9);
  }
}

TEST(MelProject, IsLinear) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Spectrum s1{std::vector<double>(257), 31.25, 512}, s2 = s1, mix = s1;
  for (auto& v : s1.magnitudes) v = u(rng);
  for (auto& v : s2.magnitudes) v = u(rng);
  const double a = 0.7, b = 2.3;
  for (std::size_t k = 0; k < mix.magnitudes.size(); ++k) mix.magnitudes[k] = a * s1.magnitudes[k] + b * s2.magnitudes[k];
  auto fb = MelFilterbank::for_spectrum(10, s1);
  auto p1 = mel_project(s1, fb), p2 = mel_project(s2, fb), pm = mel_project(mix, fb);
  for (int f = 0; f < 10; ++f) EXPECT_NEAR(pm[f], a * p1[f] + b * p2[f], 1e-9);
}

TEST(Resample, SameRateIsIdentity) {
  auto w = noise(300, 2, 0.5);
  EXPECT_EQ(resample(w, w.sample_rate).samples, w.samples);
}

TEST(Resample, LengthRounds) {
  auto w = noise(1001, 3, 0.5);
  EXPECT_EQ(resample(w, 8000).size(), 501u);  // round(500.5) away from zero
  EXPECT_EQ(resample(w, 22050).size(), std::size_t(std::llround(1001 * 22050.0 / 16000)));
}

TEST(Resample, DcIsPreservedInInterior) {
  Waveform w(std::vector<float>(400, 0.5f), 8000);
  auto up = resample(w, 16000);
  ASSERT_EQ(up.size(), 800u);
  for (std::size_t i = 100; i < 700; ++i) EXPECT_NEAR(up.samples[i], 0.5, 1e-3);
}

TEST(Resample, DownsampledSineKeepsPeak) {
  auto w = sine_wave(100.0, 16000, 16000, 0.5);
  auto d = resample(w, 8000);
  auto s = magnitude_spectrum(d);
  const double peak_hz = double(peak_bin(s)) * s.bin_hz;
  EXPECT_NEAR(peak_hz, 100.0, s.bin_hz);
}

TEST(Resample, RoundTripBandLimitedSnr) {
  // Tones up to 0.4 of the lowest Nyquist in the chain survive a trip
  // through the intermediate rate with at least 30 dB SNR.
  const std::size_t n = 4000;
  for (int mid : {8000, 12000, 24000, 44100}) {
    const double f_top = 0.4 * std::min(mid, 16000) / 2.0;
    std::vector<float> x(n, 0.0f);
    for (double f : {0.1 * f_top, 0.45 * f_top, f_top})
      for (std::size_t i = 0; i < n; ++i) x[i] += float(0.2 * std::sin(2 * std::numbers::pi * f * i / 16000.0 + f));
    Waveform w(x, 16000);
    auto back = resample(resample(w, mid), 16000);
    ASSERT_EQ(back.size(), n);
    double sig = 0, err = 0;
    for (std::size_t i = 200; i < n - 200; ++i) {
      sig += double(x[i]) * x[i];
      err += double(x[i] - back.samples[i]) * (x[i] - back.samples[i]);
    }
    EXPECT_GE(10.0 * std::log10(sig / err), 30.0) << "via " << mid << " Hz";
  }
}

TEST(WavIo, Pcm16RoundTrip) {
  auto w = noise(777, 8, 0.9);
  const auto path = std::filesystem::temp_directory_path() / "wavex_test_roundtrip.wav";
  write_wav(path, w);
  auto r = read_wav(path);
  EXPECT_EQ(r.sample_rate, w.sample_rate);
  ASSERT_EQ(r.size(), w.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 32767);
  std::filesystem::remove(path);
}

TEST(WavIo, RawFloatRoundTripIsExact) {
  auto w = noise(333, 9);
  w.sample_rate = 22050;
  const auto path = std::filesystem::temp_directory_path() / "wavex_test_roundtrip.f32";
  write_raw_f32(path, w);
  EXPECT_EQ(read_raw_f32(path), w);
}

TEST(WavIo, GarbageIsRejected) {
  std::vector<unsigned char> junk(64, 'x');
  EXPECT_ANY_THROW(decode_wav(junk));
}

}  // namespace
}  // namespace wavex
