// include/wavex/corpus.hpp

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
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wavex/audio.hpp"
#include "wavex/audio_io.hpp"
#include "wavex/common.hpp"

namespace wavex {

enum class Split { train, val, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

struct Example {
  Waveform wave;
  int speaker = 0;
  Split split = Split::train;
  std::string source;  // file path, or "synth:<speaker>:<index>"
};

struct LabelHistogram {
  std::vector<std::int64_t> counts;

  LabelHistogram() = default;
  explicit LabelHistogram(std::size_t n) : counts(n, 0) {}

  std::size_t size() const { return counts.size(); }
  std::int64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }
  std::size_t nonzero() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(),
                                                  [](std::int64_t c) { return c > 0; }));
  }
  bool operator==(const LabelHistogram&) const = default;
};

struct SplitRatios {
  double train = 0.6, val = 0.2, test = 0.2;
};

struct SpeakerCorpus {
  std::vector<Example> examples;
  int n_speakers = 0;
  std::vector<std::string> speaker_names;  // original id per contiguous id
  std::size_t skipped_files = 0;

  std::size_t size() const { return examples.size(); }

  SpeakerCorpus only(Split s) const {
    SpeakerCorpus out;
    out.n_speakers = n_speakers;
    out.speaker_names = speaker_names;
    for (const auto& e : examples)
      if (e.split == s) out.examples.push_back(e);
    return out;
  }

  std::vector<Waveform> waves() const {
    std::vector<Waveform> w;
    w.reserve(examples.size());
    for (const auto& e : examples) w.push_back(e.wave);
    return w;
  }

  std::vector<int> labels() const {
    std::vector<int> l;
    l.reserve(examples.size());
    for (const auto& e : examples) l.push_back(e.speaker);
    return l;
  }

  bool operator==(const SpeakerCorpus& o) const {
    if (n_speakers != o.n_speakers || examples.size() != o.examples.size()) return false;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto &a = examples[i], &b = o.examples[i];
      if (a.speaker != b.speaker || a.split != b.split || !(a.wave == b.wave)) return false;
    }
    return true;
  }
};

inline LabelHistogram histogram(const SpeakerCorpus& c) {
  LabelHistogram h(static_cast<std::size_t>(c.n_speakers));
  for (const auto& e : c.examples) {
    WAVEX_REQUIRE(e.speaker >= 0 && e.speaker < c.n_speakers, "histogram: speaker id out of range");
    ++h.counts[static_cast<std::size_t>(e.speaker)];
  }
  return h;
}

// Stratified split: each speaker's examples are shuffled and divided by the
// ratios, so per-speaker proportions track the corpus proportions.
inline void assign_splits(SpeakerCorpus& c, const SplitRatios& r, std::uint64_t seed) {
  const double total = r.train + r.val + r.test;
  if (!(r.train >= 0 && r.val >= 0 && r.test >= 0 && total > 0))
    throw ConfigError("split ratios must be non-negative with a positive sum");
  Rng rng(derive_seed(seed, "corpus.split"));
  std::vector<std::vector<std::size_t>> by_speaker(static_cast<std::size_t>(c.n_speakers));
  for (std::size_t i = 0; i < c.examples.size(); ++i)
    by_speaker[static_cast<std::size_t>(c.examples[i].speaker)].push_back(i);
  for (auto& idx : by_speaker) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const double n = double(idx.size());
    auto n_train = static_cast<std::size_t>(std::lround(n * r.train / total));
    auto n_val = static_cast<std::size_t>(std::lround(n * r.val / total));
    n_train = std::min(n_train, idx.size());
    n_val = std::min(n_val, idx.size() - n_train);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      Split s = j < n_train ? Split::train : (j < n_train + n_val ? Split::val : Split::test);
      c.examples[idx[j]].split = s;
    }
  }
}

// ---------------------------------------------------------------------------
// Directory ingest

struct LayoutSpec {
  std::vector<std::string> extensions{".wav", ".f32"};
  SplitRatios ratios{};
  std::uint64_t split_seed = 0;
};

inline SpeakerCorpus ingest_directory(const std::filesystem::path& root,
                                      const LayoutSpec& layout = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<fs::path> speaker_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) speaker_dirs.push_back(entry.path());
  std::sort(speaker_dirs.begin(), speaker_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  SpeakerCorpus c;
  for (const auto& dir : speaker_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto ext = entry.path().extension().string();
      if (std::find(layout.extensions.begin(), layout.extensions.end(), ext) !=
          layout.extensions.end())
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Example> loaded;
    for (const auto& f : files) {
      try {
        Waveform w = f.extension() == ".f32" ? read_raw_f32(f) : read_wav(f);
        loaded.push_back(Example{std::move(w), 0, Split::train, f.string()});
      } catch (const Error& e) {
        ++c.skipped_files;
        std::cerr << "warning: skipping " << f.string() << ": " << e.what() << "\n";
      }
    }
    if (loaded.empty()) continue;
    const int id = c.n_speakers++;
    c.speaker_names.push_back(dir.filename().string());
    for (auto& e : loaded) {
      e.speaker = id;
      c.examples.push_back(std::move(e));
    }
  }
  if (c.examples.empty()) throw IoError("no usable audio files under " + root.string());
  assign_splits(c, layout.ratios, layout.split_seed);
  return c;
}

// CSV manifest: path, speaker_id, split, duration_s.
inline void write_manifest(const std::filesystem::path& path, const SpeakerCorpus& c) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "path,speaker_id,split,duration_s\n";
  for (const auto& e : c.examples)
    out << e.source << "," << e.speaker << "," << to_string(e.split) << "," << e.wave.duration_s()
        << "\n";
}

// ---------------------------------------------------------------------------
// Synthetic speakers

struct ToySpeakerProfile {
  double fundamental_hz = 150.0;
  std::vector<double> harmonic_amplitudes;  // <= 8 entries, sum <= 1
  double vibrato_rate_hz = 5.0;
  double vibrato_depth = 0.005;  // relative frequency deviation
  double noise_floor = 0.01;
};

struct SynthOptions {
  int sample_rate = kCanonicalSampleRate;
  SplitRatios ratios{};
  double f0_min = 80.0;
  double f0_max = 400.0;
  double min_separation_hz = 3.0;
};

// Renders one utterance. Per-utterance variation: f0 jitter, harmonic phases,
// vibrato phase, gain. The result peaks at <= 0.9.
inline Waveform render_speaker(const ToySpeakerProfile& p, double duration_s, int sample_rate,
                               Rng& rng) {
  const auto len = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  WAVEX_REQUIRE(len >= 1, "render_speaker: duration too short");
  std::normal_distribution<double> jitter(0.0, 0.01);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> gain(0.55, 0.9);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double f0 = p.fundamental_hz * (1.0 + jitter(rng));
  const double vib_phase = phase(rng);
  std::vector<double> h_phase(p.harmonic_amplitudes.size());
  for (auto& ph : h_phase) ph = phase(rng);

  std::vector<double> x(len, 0.0);
  double inst_phase = 0.0;
  const double nyquist = 0.5 * sample_rate;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = double(i) / sample_rate;
    const double f = f0 * (1.0 + p.vibrato_depth *
                                     std::sin(2.0 * std::numbers::pi * p.vibrato_rate_hz * t + vib_phase));
    double v = 0.0;
    for (std::size_t h = 0; h < p.harmonic_amplitudes.size(); ++h) {
      if (f * double(h + 1) >= nyquist) break;
      v += p.harmonic_amplitudes[h] * std::sin(double(h + 1) * inst_phase + h_phase[h]);
    }
    if (p.noise_floor > 0.0) v += p.noise_floor * gauss(rng);
    x[i] = v;
    inst_phase += 2.0 * std::numbers::pi * f / sample_rate;
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.0 ? gain(rng) / peak : 0.0;
  std::vector<float> s(len);
  for (std::size_t i = 0; i < len; ++i) s[i] = static_cast<float>(x[i] * scale);
  return Waveform(std::move(s), sample_rate);
}

// Draws n fundamentals in [lo, hi] with pairwise separation >= sep: uniform
// slack is distributed over sorted gaps, so every draw is feasible.
inline std::vector<double> draw_fundamentals(int n, double lo, double hi, double sep, Rng& rng) {
  const double slack = (hi - lo) - sep * double(n - 1);
  if (slack < 0.0)
    throw ConfigError("synth_corpus: cannot place " + std::to_string(n) +
                      " speakers with the requested fundamental separation");
  std::uniform_real_distribution<double> u(0.0, slack);
  std::vector<double> offs(static_cast<std::size_t>(n));
  for (auto& o : offs) o = u(rng);
  std::sort(offs.begin(), offs.end());
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = lo + offs[static_cast<std::size_t>(i)] + sep * i;
  std::shuffle(f.begin(), f.end(), rng);
  return f;
}

inline std::vector<ToySpeakerProfile> draw_profiles(int n_speakers, std::uint64_t seed,
                                                    const SynthOptions& opt = {}) {
  Rng rng(derive_seed(seed, "corpus.profiles"));
  auto f0 = draw_fundamentals(n_speakers, opt.f0_min, opt.f0_max, opt.min_separation_hz, rng);
  std::uniform_int_distribution<int> n_harm(3, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> vib_rate(3.0, 7.0);
  std::uniform_real_distribution<double> vib_depth(0.002, 0.01);
  std::uniform_real_distribution<double> noise(0.0, 0.02);
  std::vector<ToySpeakerProfile> out;
  for (int s = 0; s < n_speakers; ++s) {
    ToySpeakerProfile p;
    p.fundamental_hz = f0[static_cast<std::size_t>(s)];
    const int h = n_harm(rng);
    double sum = 0.0;
    for (int i = 0; i < h; ++i) {
      double a = 0.05 + u01(rng);
      p.harmonic_amplitudes.push_back(a);
      sum += a;
    }
    for (auto& a : p.harmonic_amplitudes) a /= sum;
    p.vibrato_rate_hz = vib_rate(rng);
    p.vibrato_depth = vib_depth(rng);
    p.noise_floor = noise(rng);
    out.push_back(std::move(p));
  }
  return out;
}

inline SpeakerCorpus synth_corpus_from_profiles(const std::vector<ToySpeakerProfile>& profiles,
                                                int examples_per_speaker, double duration_s,
                                                std::uint64_t seed, const SynthOptions& opt = {}) {
  WAVEX_REQUIRE(examples_per_speaker >= 1, "synth_corpus: examples_per_speaker must be >= 1");
  SpeakerCorpus c;
  c.n_speakers = static_cast<int>(profiles.size());
  for (int s = 0; s < c.n_speakers; ++s) {
    c.speaker_names.push_back("toy" + std::to_string(s));
    for (int i = 0; i < examples_per_speaker; ++i) {
      Rng rng(derive_seed(seed, "corpus.utterance",
                          std::uint64_t(s) * 1000003ULL + std::uint64_t(i)));
      c.examples.push_back(Example{
          render_speaker(profiles[static_cast<std::size_t>(s)], duration_s, opt.sample_rate, rng), s,
          Split::train, "synth:" + std::to_string(s) + ":" + std::to_string(i)});
    }
  }
  assign_splits(c, opt.ratios, seed);
  return c;
}

inline SpeakerCorpus synth_corpus(int n_speakers, int examples_per_speaker, double duration_s,
                                  std::uint64_t seed, const SynthOptions& opt = {}) {
  WAVEX_REQUIRE(n_speakers >= 2, "synth_corpus: need at least 2 speakers");
  return synth_corpus_from_profiles(draw_profiles(n_speakers, seed, opt), examples_per_speaker,
                                    duration_s, seed, opt);
}

// ---------------------------------------------------------------------------
// Subsets

struct DiverseSubset {
  std::size_t size;
};
struct FirstKSpeakers {
  int k;
  std::optional<std::size_t> size;  // sample this many from the retained speakers
};
struct RandomSubset {
  std::size_t volume;
};
using SubsetMode = std::variant<DiverseSubset, FirstKSpeakers, RandomSubset>;

inline SpeakerCorpus subset(const SpeakerCorpus& c, const SubsetMode& mode, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "corpus.subset"));
  SpeakerCorpus out;
  out.n_speakers = c.n_speakers;
  out.speaker_names = c.speaker_names;
  std::vector<std::size_t> picked;

  if (const auto* d = std::get_if<DiverseSubset>(&mode)) {
    WAVEX_REQUIRE(d->size <= c.size(), "subset: requested size exceeds corpus size");
    std::vector<std::vector<std::size_t>> by_speaker(static_cast<std::size_t>(c.n_speakers));
    for (std::size_t i = 0; i < c.size(); ++i)
      by_speaker[static_cast<std::size_t>(c.examples[i].speaker)].push_back(i);
    for (auto& v : by_speaker) std::shuffle(v.begin(), v.end(), rng);
    std::vector<std::size_t> order(by_speaker.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    // Round-robin over speakers until the requested size is reached.
    for (std::size_t round = 0; picked.size() < d->size; ++round)
      for (std::size_t s : order) {
        if (picked.size() == d->size) break;
        if (round < by_speaker[s].size()) picked.push_back(by_speaker[s][round]);
      }
  } else if (const auto* f = std::get_if<FirstKSpeakers>(&mode)) {
    WAVEX_REQUIRE(f->k >= 1 && f->k <= c.n_speakers, "subset: k exceeds number of speakers");
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.examples[i].speaker < f->k) picked.push_back(i);
    if (f->size) {
      WAVEX_REQUIRE(*f->size <= picked.size(),
                    "subset: requested size exceeds examples of the first k speakers");
      std::shuffle(picked.begin(), picked.end(), rng);
      picked.resize(*f->size);
    }
  } else {
    const auto& r = std::get<RandomSubset>(mode);
    WAVEX_REQUIRE(r.volume <= c.size(), "subset: requested volume exceeds corpus size");
    picked.resize(c.size());
    std::iota(picked.begin(), picked.end(), 0);
    std::shuffle(picked.begin(), picked.end(), rng);
    picked.resize(r.volume);
  }
  std::sort(picked.begin(), picked.end());
  for (std::size_t i : picked) out.examples.push_back(c.examples[i]);
  return out;
}

}  // namespace wavex
