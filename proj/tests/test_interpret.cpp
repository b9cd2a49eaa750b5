// tests/test_interpret.cpp

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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "wavex/augment.hpp"
#include "wavex/interpret.hpp"

namespace wavex {
namespace {

KnaggCNN<float> small_net(std::uint64_t seed, int input_len = 1024) {
  KnaggCNNConfig c;
  c.n_classes = 3;
  c.input_len = input_len;
  c.width_scale = 1.0 / 16;
  return KnaggCNN<float>(c, seed);
}

OctaveSchedule quick_schedule() {
  OctaveSchedule s;
  s.steps_per_octave = 12;
  s.n_octaves = 3;
  return s;
}

TEST(Octaves, DefaultLengthsAtReferenceInput) {
  const std::vector<std::size_t> want{5057, 9103, 16384, 29491, 53084};
  EXPECT_EQ(OctaveSchedule{}.lengths(16384), want);
}

// Independent restatement of the rounding rule for arbitrary inputs.
TEST(Octaves, LengthsFollowRoundedGeometricGrowth) {
  for (std::size_t n : {512u, 1000u, 2048u, 4097u, 16384u}) {
    for (double r : {1.5, 1.8, 2.0}) {
      OctaveSchedule s;
      s.ratio = r;
      s.start_scale = 1.0 / (r * r);
      const auto got = s.lengths(n);
      ASSERT_EQ(got.size(), 5u);
      EXPECT_EQ(got[0], std::size_t(std::llround(double(n) / (r * r))));
      EXPECT_EQ(got[1], std::size_t(std::llround(double(got[0]) * r)));
      EXPECT_EQ(got[2], n);
      EXPECT_EQ(got[3], std::size_t(std::llround(double(n) * r)));
      EXPECT_EQ(got[4], std::size_t(std::llround(double(n) * r * r)));
      for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GT(got[i], got[i - 1]);
    }
  }
}

TEST(Octaves, ValidationRejectsBadSchedules) {
  OctaveSchedule s;
  s.ratio = 1.0;
  EXPECT_THROW(s.lengths(100), ConfigError);
  s = {};
  s.steps_per_octave = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.init_amplitude = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  EXPECT_THROW(s.lengths(1), ConfigError);  // first octave rounds to zero
  auto j = nlohmann::json{{"ratio", 2.0}};
  EXPECT_DOUBLE_EQ(j.get<OctaveSchedule>().start_scale, 0.25);
}

TEST(Permute, PreservesNetworkFunction) {
  auto a = small_net(3);
  Rng rng(4);
  std::vector<Waveform> x;
  for (int i = 0; i < 4; ++i) x.push_back(gaussian_noise_query(1024, 0.2, rng));
  const auto before = predict_proba(a, x);
  for (int layer = 1; layer <= KnaggCNN<float>::kConvBlocks; ++layer) {
    std::vector<int> perm(static_cast<std::size_t>(a.block_channels(layer)));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    permute_filters(a, layer, perm);
  }
  const auto after = predict_proba(a, x);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = 0; k < before[i].size(); ++k) EXPECT_NEAR(after[i][k], before[i][k], 1e-5);
}

TEST(Permute, ReordersFilterResponses) {
  auto a = small_net(5), b = a;
  const int layer = 2, n = a.block_channels(layer);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  permute_filters(b, layer, perm);
  Rng rng(6);
  auto w = gaussian_noise_query(1024, 0.3, rng);
  for (int f = 0; f < n; ++f)
    EXPECT_NEAR(filter_activation_infer(b, w, layer, f), filter_activation_infer(a, w, layer, perm[std::size_t(f)]),
                1e-6);
  EXPECT_THROW(permute_filters(b, layer, std::vector<int>(std::size_t(n), 0)), PreconditionError);
  EXPECT_THROW(permute_filters(b, layer, std::vector<int>{0}), PreconditionError);
}

TEST(Visualize, RaisesActivationAndFitsFinalOctave) {
  auto net = small_net(7);
  const auto sched = quick_schedule();
  const auto lengths = sched.lengths(1024);
  int raised = 0, live = 0;
  for (int f = 0; f < net.block_channels(1); ++f) {
    auto v = visualize_filter(net, 1, f, sched, 11);
    EXPECT_EQ(v.wave.size(), lengths.back());
    EXPECT_TRUE(v.wave.within_unit_range());
    if (v.degenerate) continue;
    ++live;
    raised += v.final_activation > v.initial_activation;
  }
  ASSERT_GT(live, 0);
  EXPECT_GE(double(raised) / live, 0.9);
}

TEST(Visualize, SameSeedIsDeterministic) {
  auto net = small_net(8);
  auto a = visualize_filter(net, 3, 1, quick_schedule(), 21), b = visualize_filter(net, 3, 1, quick_schedule(), 21);
  EXPECT_EQ(a.wave, b.wave);
  auto all = visualize_layer(net, 3, quick_schedule(), 21, 2);
  EXPECT_EQ(all[1].wave, a.wave);
}

TEST(Visualize, SilentFilterIsFlaggedDegenerate) {
  auto net = small_net(9);
  for (auto* p : net.state())
    if (p->name == "bn1.beta") p->value[0] = -1e3f;
  auto v = visualize_filter(net, 1, 0, quick_schedule(), 1);
  EXPECT_TRUE(v.reseeded);
  EXPECT_TRUE(v.degenerate);
  EXPECT_THROW(visualize_filter(net, 0, 0, quick_schedule(), 1), PreconditionError);
  EXPECT_THROW(visualize_filter(net, 1, 999, quick_schedule(), 1), PreconditionError);
}

TEST(Distance, CosineProperties) {
  const std::vector<double> a{1, 2, 3}, b{2, 4, 6}, c{-3, 0, 1}, z{0, 0, 0};
  EXPECT_NEAR(cosine_distance(a, b), 0.0, 1e-12);
  EXPECT_NEAR(cosine_distance(a, c), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(cosine_distance(a, z), 1.0);
  Rng rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(10), y(10);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    EXPECT_DOUBLE_EQ(cosine_distance(x, y), cosine_distance(y, x));
    EXPECT_GE(cosine_distance(x, y), 0.0);
  }
}

TEST(LowFrequency, FractionSeparatesHumFromVoiceBand) {
  EXPECT_GT(low_frequency_fraction(magnitude_spectrum(sine_wave(40, 8192, 16000, 0.5)), 100), 0.95);
  EXPECT_LT(low_frequency_fraction(magnitude_spectrum(sine_wave(1000, 8192, 16000, 0.5)), 100), 0.01);
  EXPECT_DOUBLE_EQ(low_frequency_fraction(magnitude_spectrum(Waveform(std::vector<float>(64, 0.f), 16000)), 100), 1.0);
}

TEST(MatchFeatures, ExcludedFiltersAreSkipped) {
  FilterFeatures fa, fb;
  fa.mel = {{1, 0}, {0, 1}, {1, 1}};
  fb.mel = {{0, 1}, {1, 0.1}, {1, 1}};
  fa.excluded = {false, true, false};
  fb.excluded = {false, false, true};
  auto m = match_features(fa, fb, 2);
  EXPECT_EQ(m.excluded_a, std::vector<int>{1});
  EXPECT_EQ(m.excluded_b, std::vector<int>{2});
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].b, 1);
  EXPECT_EQ(m.pairs[1].b, 1);  // column 2 is excluded even though it matches exactly
  EXPECT_TRUE(std::isnan(m.distances[1][0]));
  EXPECT_TRUE(std::isnan(m.distances[0][2]));
  fb.excluded = {true, true, true};
  EXPECT_THROW(match_features(fa, fb, 2), PreconditionError);
}

TEST(Match, SelfMatchIsExact) {
  auto net = small_net(12);
  MatchOptions opt;
  opt.schedule = quick_schedule();
  opt.seed = 3;
  opt.threads = 1;
  auto m = match_filters(net, net, 1, opt);
  for (const auto& p : m.pairs) {
    EXPECT_EQ(p.a, p.b);
    EXPECT_LE(p.distance, 1e-6);
  }
}

TEST(Match, RecoversHiddenPermutation) {
  auto a = small_net(13);
  for (int layer : {1, 2}) {
    auto b = a;
    const int n = a.block_channels(layer);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(static_cast<std::uint64_t>(layer));
    std::shuffle(perm.begin(), perm.end(), rng);
    permute_filters(b, layer, perm);
    MatchOptions opt;
    opt.schedule = quick_schedule();
    opt.seed = 5;
    opt.threads = 1;
    auto m = match_filters(a, b, layer, opt);
    ASSERT_FALSE(m.pairs.empty());
    // b's filter i is a's filter perm[i].
    std::vector<int> inverse(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) inverse[std::size_t(perm[std::size_t(i)])] = i;
    for (const auto& p : m.pairs) {
      EXPECT_LE(p.distance, 1e-6) << "layer " << layer;
      // Exact ties between distinct filters are possible in principle; the
      // matched filter must then be an identical visualisation.
      if (p.b != inverse[std::size_t(p.a)]) {
        EXPECT_LE(m.distances[std::size_t(p.a)][std::size_t(inverse[std::size_t(p.a)])], 1e-6);
      }
    }
  }
}

TEST(SineResponse, GridAndNyquist) {
  auto net = small_net(14);
  const auto grid = linear_grid(50, 7950, 17);
  EXPECT_DOUBLE_EQ(grid.front(), 50);
  EXPECT_DOUBLE_EQ(grid.back(), 7950);
  auto r = sine_response(net, 1, 0, grid);
  ASSERT_EQ(r.size(), grid.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_DOUBLE_EQ(r[i].freq_hz, grid[i]);
    EXPECT_GE(r[i].activation, 0.0);
  }
  const std::vector<double> bad{8000};
  EXPECT_THROW(sine_response(net, 1, 0, bad), PreconditionError);
}

// A filter built as a narrow band-pass answers most strongly near its centre.
TEST(SineResponse, PeaksAtTunedFrequency) {
  auto net = small_net(15);
  const double tuned = 1000.0;
  for (auto* p : net.state()) {
    if (p->name != "conv1.weight") continue;
    const std::size_t k = std::size_t(p->shape[2]), in = std::size_t(p->shape[1]);
    for (std::size_t t = 0; t < k * in; ++t)
      p->value[t] = float(std::cos(2 * M_PI * tuned * double(t) / kCanonicalSampleRate) *
                          (0.5 - 0.5 * std::cos(2 * M_PI * double(t) / double(k - 1))));
  }
  const std::vector<double> freqs{250, 500, 1000, 2000, 4000};
  auto r = sine_response(net, 1, 0, freqs);
  auto best = std::max_element(r.begin(), r.end(), [](auto& x, auto& y) { return x.activation < y.activation; });
  EXPECT_DOUBLE_EQ(best->freq_hz, tuned);
}

}  // namespace
}  // namespace wavex
