// tests/test_sampling.cpp

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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wavex/sampling.hpp"

namespace wavex {
namespace {

// Answers with label = round(first sample * 100) mod n_classes, so tests can
// script the label stream through the waveforms.
class ScriptedChannel : public QueryChannel {
 public:
  ScriptedChannel(int n_classes, std::optional<std::int64_t> budget) : n_(n_classes), budget_(budget) {}
  ChannelInfo info() const override { return {n_, 4, kCanonicalSampleRate, LabelMode::hard}; }
  std::int64_t used() const override { return used_; }
  std::optional<std::int64_t> limit() const override { return budget_; }
  Labels query(std::span<const Waveform> batch) override {
    const auto n = static_cast<std::int64_t>(batch.size());
    if (budget_ && used_ + n > *budget_) throw BudgetExhausted(*budget_ - used_, n);
    used_ += n;
    Labels l;
    for (const auto& w : batch) l.ids.push_back(int(std::lround(w.samples[0] * 100)) % n_);
    return l;
  }

 private:
  int n_;
  std::optional<std::int64_t> budget_;
  std::int64_t used_ = 0;
};

Waveform tagged(int label) { return Waveform({float(label) / 100.f, 0.f, 0.f, 0.f}, kCanonicalSampleRate); }

std::vector<LabeledQuery> stream(const std::vector<int>& labels) {
  std::vector<LabeledQuery> s;
  for (int l : labels) s.push_back({tagged(l), l, {}});
  return s;
}

std::vector<int> random_labels(std::size_t n, int k, Rng& rng) {
  // Skewed so some labels hit their caps and others never appear.
  std::geometric_distribution<int> g(0.3);
  std::vector<int> out(n);
  for (auto& l : out) l = std::min(g(rng), k - 1);
  return out;
}

LabelHistogram hist(std::vector<std::int64_t> c) {
  LabelHistogram h;
  h.counts = std::move(c);
  return h;
}

TEST(ThresholdPolicy, CapsAndValidation) {
  EXPECT_FALSE(ThresholdPolicy::none().cap(3).has_value());
  EXPECT_EQ(*ThresholdPolicy::fixed_cap(7).cap(0), 7);
  EXPECT_THROW(ThresholdPolicy::fixed_cap(0), ConfigError);
  auto p = ThresholdPolicy::scaled_cap(1.5, hist({2, 3, 0}));
  EXPECT_EQ(*p.cap(0), 3);
  EXPECT_EQ(*p.cap(1), 5);  // ceil(4.5)
  EXPECT_EQ(*p.cap(2), 0);
  EXPECT_EQ(*ThresholdPolicy::scaled_cap(1.0, hist({4})).cap(0), 4);
  EXPECT_THROW(ThresholdPolicy::scaled_cap(0.9, hist({1})), ConfigError);
  EXPECT_THROW(ThresholdPolicy::scaled_cap(2.0, {}), ConfigError);
  EXPECT_THROW(ThresholdFilter(p, 4), ConfigError);
}

TEST(ThresholdPolicy, JsonRoundTrip) {
  for (const auto& p : {ThresholdPolicy::none(), ThresholdPolicy::fixed_cap(12),
                        ThresholdPolicy::scaled_cap(2.5, hist({1, 2}))}) {
    nlohmann::json j = p;
    auto q = j.get<ThresholdPolicy>();
    EXPECT_EQ(q.kind, p.kind);
    EXPECT_EQ(q.alpha, p.alpha);
    EXPECT_EQ(q.beta, p.beta);
    EXPECT_EQ(q.reference, p.reference);
  }
  EXPECT_THROW(nlohmann::json({{"kind", "adaptive"}}).get<ThresholdPolicy>(), ConfigError);
}

TEST(Threshold, MatchesReferenceFoldOnRandomStreams) {
  Rng rng(2024);
  constexpr int k = 9;
  for (int trial = 0; trial < 200; ++trial) {
    auto labels = random_labels(std::uniform_int_distribution<std::size_t>(0, 120)(rng), k, rng);
    std::vector<std::int64_t> ref(k);
    for (auto& r : ref) r = std::uniform_int_distribution<std::int64_t>(0, 6)(rng);
    const double beta = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
    const auto alpha = std::uniform_int_distribution<std::int64_t>(1, 15)(rng);

    const auto s = stream(labels);
    for (const auto& policy : {ThresholdPolicy::fixed_cap(alpha), ThresholdPolicy::scaled_cap(beta, hist(ref))}) {
      std::vector<std::int64_t> caps(k);
      for (int c = 0; c < k; ++c)
        caps[std::size_t(c)] = policy.kind == ThresholdPolicy::Kind::fixed
                                   ? alpha
                                   : std::int64_t(std::ceil(beta * double(ref[std::size_t(c)]) - 1e-9));
      const auto keep = oracle::threshold_fold(labels, caps);
      const auto r = apply_threshold(s, policy, k);

      std::vector<int> want;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (keep[i]) want.push_back(labels[i]);
      std::vector<int> got;
      for (const auto& q : r.records) got.push_back(q.label);
      ASSERT_EQ(got, want) << "trial " << trial << " " << policy.describe();
      EXPECT_EQ(r.discarded + std::int64_t(r.size()), std::int64_t(labels.size()));
      EXPECT_EQ(r.queries_used, std::int64_t(labels.size()));
      for (int c = 0; c < k; ++c) EXPECT_LE(r.retained_counts.counts[std::size_t(c)], caps[std::size_t(c)]);
    }
  }
}

TEST(Threshold, NoneKeepsEverything) {
  auto r = apply_threshold(stream({0, 0, 0, 1}), ThresholdPolicy::none(), 2);
  EXPECT_EQ(r.size(), 4u);
  EXPECT_EQ(r.discarded, 0);
  EXPECT_EQ(r.retained_counts, hist({3, 1}));
}

TEST(Threshold, FirstComeFirstServed) {
  auto s = stream({1, 1, 1, 1});
  for (std::size_t i = 0; i < s.size(); ++i) s[i].wave.samples[1] = float(i);
  auto r = apply_threshold(s, ThresholdPolicy::fixed_cap(2), 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.records[0].wave.samples[1], 0.f);
  EXPECT_EQ(r.records[1].wave.samples[1], 1.f);
}

TEST(Threshold, OutOfRangeLabelIsRejected) {
  EXPECT_THROW(apply_threshold(stream({5}), ThresholdPolicy::none(), 3), PreconditionError);
}

TEST(LabelQueries, TruncatesAtBudgetKeepingPrefix) {
  ScriptedChannel ch(10, 7);
  std::vector<Waveform> waves;
  for (int i = 0; i < 10; ++i) waves.push_back(tagged(i));
  bool truncated = false;
  auto out = label_queries(ch, waves, truncated, 3);
  EXPECT_TRUE(truncated);
  ASSERT_EQ(out.size(), 7u);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(out[std::size_t(i)].label, i);
  EXPECT_EQ(ch.used(), 7);
}

TEST(LabelQueries, ExactBudgetIsNotTruncated) {
  ScriptedChannel ch(10, 6);
  std::vector<Waveform> waves(6, tagged(2));
  bool truncated = false;
  EXPECT_EQ(label_queries(ch, waves, truncated, 4).size(), 6u);
  EXPECT_FALSE(truncated);
}

QueryGenerator label_generator(int k) {
  return [k](std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Waveform> out;
    for (int l : random_labels(count, k, rng)) out.push_back(tagged(l));
    return out;
  };
}

TEST(Iterative, HistoriesAreMonotoneAndCapped) {
  constexpr int k = 6;
  ScriptedChannel ch(k, std::nullopt);
  const auto fixed = ThresholdPolicy::fixed_cap(4);
  const auto scaled = ThresholdPolicy::scaled_cap(2.0, hist({1, 2, 3, 1, 0, 5}));
  auto r = iterative_sample(label_generator(k), ch, fixed, scaled, 8, 10, 77);
  EXPECT_EQ(r.queries_used, 80);
  EXPECT_FALSE(r.truncated);
  ASSERT_EQ(r.first_history.size(), 8u);
  for (const auto* h : {&r.first_history, &r.second_history})
    for (std::size_t it = 1; it < h->size(); ++it)
      for (int c = 0; c < k; ++c) EXPECT_GE((*h)[it].counts[std::size_t(c)], (*h)[it - 1].counts[std::size_t(c)]);
  for (int c = 0; c < k; ++c) {
    EXPECT_LE(r.first.retained_counts.counts[std::size_t(c)], 4);
    EXPECT_LE(r.second.retained_counts.counts[std::size_t(c)], *scaled.cap(c));
  }
  EXPECT_EQ(r.first.retained_counts, r.first_history.back());
  EXPECT_EQ(r.first.discarded + std::int64_t(r.first.size()), 80);
  EXPECT_EQ(r.second.discarded + std::int64_t(r.second.size()), 80);
}

TEST(Iterative, SameSeedSameOutcome) {
  ScriptedChannel a(5, std::nullopt), b(5, std::nullopt);
  auto p = ThresholdPolicy::fixed_cap(3);
  auto x = iterative_sample(label_generator(5), a, p, ThresholdPolicy::none(), 4, 9, 5);
  auto y = iterative_sample(label_generator(5), b, p, ThresholdPolicy::none(), 4, 9, 5);
  EXPECT_EQ(x.first_history, y.first_history);
  EXPECT_EQ(x.second.size(), 36u);
}

TEST(Iterative, StopsWhenBudgetRunsOut) {
  ScriptedChannel ch(5, 25);
  auto r = iterative_sample(label_generator(5), ch, ThresholdPolicy::none(), ThresholdPolicy::none(), 10, 10, 3);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.queries_used, 25);
  EXPECT_EQ(r.first.size(), 25u);
  EXPECT_EQ(r.first_history.size(), 3u);
  EXPECT_TRUE(r.second.truncated);
}

TEST(Retained, SaveLoadRoundTrip) {
  RetainedSet s;
  s.retained_counts = hist({1, 1});
  s.discarded = 3;
  s.queries_used = 5;
  s.truncated = true;
  s.records.push_back({tagged(0), 0, {0.9f, 0.1f}});
  s.records.push_back({tagged(1), 1, {0.2f, 0.8f}});
  const auto dir = std::filesystem::temp_directory_path() / "wavex_retained";
  std::filesystem::remove_all(dir);
  save_retained(dir, s);
  auto t = load_retained(dir);
  ASSERT_EQ(t.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(t.records[i].label, s.records[i].label);
    EXPECT_EQ(t.records[i].soft, s.records[i].soft);
    EXPECT_EQ(t.records[i].wave, s.records[i].wave);
  }
  EXPECT_EQ(t.retained_counts, s.retained_counts);
  EXPECT_EQ(t.discarded, 3);
  EXPECT_EQ(t.queries_used, 5);
  EXPECT_TRUE(t.truncated);
  std::filesystem::remove(dir / "soft.f32");
  EXPECT_THROW(load_retained(dir), IoError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace wavex
