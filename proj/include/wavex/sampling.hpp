// include/wavex/sampling.hpp

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

// Per-label retention caps for synthetic query streams, and the repeated
// generate -> label -> retain loop.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/audio.hpp"
#include "wavex/corpus.hpp"
#include "wavex/nn.hpp"
#include "wavex/oracle_channel.hpp"

namespace wavex {

struct ThresholdPolicy {
  enum class Kind { none, fixed, scaled };

  Kind kind = Kind::none;
  std::int64_t alpha = 0;    // fixed cap per label
  double beta = 1.0;         // scaled cap: ceil(beta * reference[i])
  LabelHistogram reference;  // victim's per-label training counts

  static ThresholdPolicy none() { return {}; }
  static ThresholdPolicy fixed_cap(std::int64_t alpha) {
    ThresholdPolicy p;
    p.kind = Kind::fixed;
    p.alpha = alpha;
    p.validate();
    return p;
  }
  static ThresholdPolicy scaled_cap(double beta, LabelHistogram reference) {
    ThresholdPolicy p;
    p.kind = Kind::scaled;
    p.beta = beta;
    p.reference = std::move(reference);
    p.validate();
    return p;
  }

  void validate() const {
    if (kind == Kind::fixed && alpha < 1) throw ConfigError("threshold: alpha must be >= 1");
    if (kind == Kind::scaled) {
      if (!(beta >= 1.0)) throw ConfigError("threshold: beta must be >= 1");
      if (reference.size() == 0) throw ConfigError("threshold: scaled cap needs a reference histogram");
    }
  }

  void validate(int n_classes) const {
    validate();
    if (kind == Kind::scaled && static_cast<int>(reference.size()) != n_classes)
      throw ConfigError("threshold: reference histogram must have one entry per victim class");
  }

  // nullopt = unbounded.
  std::optional<std::int64_t> cap(int label) const {
    switch (kind) {
      case Kind::none: return std::nullopt;
      case Kind::fixed: return alpha;
      case Kind::scaled:
        if (label < 0 || static_cast<std::size_t>(label) >= reference.size()) return 0;
        return static_cast<std::int64_t>(
            std::ceil(beta * double(reference.counts[static_cast<std::size_t>(label)]) - 1e-9));
    }
    return std::nullopt;
  }

  std::string describe() const {
    std::ostringstream s;
    switch (kind) {
      case Kind::none: s << "none"; break;
      case Kind::fixed: s << "alpha=" << alpha; break;
      case Kind::scaled: s << "beta=" << beta; break;
    }
    return s.str();
  }
};

inline void to_json(nlohmann::json& j, const ThresholdPolicy& p) {
  switch (p.kind) {
    case ThresholdPolicy::Kind::none: j = {{"kind", "none"}}; break;
    case ThresholdPolicy::Kind::fixed: j = {{"kind", "static"}, {"alpha", p.alpha}}; break;
    case ThresholdPolicy::Kind::scaled:
      j = {{"kind", "dynamic"}, {"beta", p.beta}, {"reference", p.reference.counts}};
      break;
  }
}

// A dynamic policy read from config may leave "reference" out; the harness
// fills it from the victim's training histogram.
inline void from_json(const nlohmann::json& j, ThresholdPolicy& p) {
  const std::string kind = j.value("kind", std::string("none"));
  p = ThresholdPolicy{};
  if (kind == "none") return;
  if (kind == "static") {
    p.kind = ThresholdPolicy::Kind::fixed;
    p.alpha = j.at("alpha").get<std::int64_t>();
  } else if (kind == "dynamic") {
    p.kind = ThresholdPolicy::Kind::scaled;
    p.beta = j.at("beta").get<double>();
    if (j.contains("reference")) p.reference.counts = j.at("reference").get<std::vector<std::int64_t>>();
  } else {
    throw ConfigError("unknown threshold kind: " + kind);
  }
}

struct LabeledQuery {
  Waveform wave;
  int label = 0;
  std::vector<float> soft;  // empty under hard labels
};

struct RetainedSet {
  std::vector<LabeledQuery> records;
  LabelHistogram retained_counts;
  std::int64_t discarded = 0;
  std::int64_t queries_used = 0;
  bool truncated = false;

  std::size_t size() const { return records.size(); }
};

// Online FCFS filter: a record is kept iff its label is still under its cap.
class ThresholdFilter {
 public:
  ThresholdFilter(ThresholdPolicy policy, int n_classes) : policy_(std::move(policy)) {
    policy_.validate(n_classes);
    set_.retained_counts = LabelHistogram(static_cast<std::size_t>(n_classes));
  }

  bool offer(const LabeledQuery& q) {
    WAVEX_REQUIRE(q.label >= 0 && static_cast<std::size_t>(q.label) < set_.retained_counts.size(),
                  "threshold: label out of range");
    auto& count = set_.retained_counts.counts[static_cast<std::size_t>(q.label)];
    const auto cap = policy_.cap(q.label);
    if (cap && count >= *cap) {
      ++set_.discarded;
      return false;
    }
    ++count;
    set_.records.push_back(q);
    return true;
  }

  const ThresholdPolicy& policy() const { return policy_; }
  const RetainedSet& retained() const { return set_; }
  RetainedSet& retained() { return set_; }

 private:
  ThresholdPolicy policy_;
  RetainedSet set_;
};

inline RetainedSet apply_threshold(std::span<const LabeledQuery> stream, const ThresholdPolicy& policy,
                                   int n_classes) {
  ThresholdFilter f(policy, n_classes);
  for (const auto& q : stream) f.offer(q);
  auto out = std::move(f.retained());
  out.queries_used = static_cast<std::int64_t>(stream.size());
  return out;
}

// Produces `count` synthetic queries for a given seed.
using QueryGenerator = std::function<std::vector<Waveform>(std::size_t count, std::uint64_t seed)>;

// Labels `waves` through the channel in chunks, stopping early (truncated)
// if the budget runs out. Returns the labeled prefix.
inline std::vector<LabeledQuery> label_queries(QueryChannel& channel, std::vector<Waveform> waves,
                                               bool& truncated, std::size_t chunk = 256) {
  std::vector<LabeledQuery> out;
  out.reserve(waves.size());
  for (std::size_t start = 0; start < waves.size();) {
    std::size_t n = std::min(chunk, waves.size() - start);
    if (auto rem = channel.remaining(); rem && static_cast<std::int64_t>(n) > *rem) {
      n = static_cast<std::size_t>(std::max<std::int64_t>(*rem, 0));
      truncated = true;
    }
    if (n == 0) break;
    Labels labels;
    try {
      labels = channel.query(std::span<const Waveform>(waves).subspan(start, n));
    } catch (const BudgetExhausted&) {
      truncated = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      LabeledQuery q{std::move(waves[start + i]), labels.ids[i], {}};
      if (!labels.probabilities.empty()) q.soft = std::move(labels.probabilities[i]);
      out.push_back(std::move(q));
    }
    start += n;
    if (truncated) break;
  }
  return out;
}

struct IterativeResult {
  RetainedSet first, second;  // one per policy, same labeled stream
  std::int64_t queries_used = 0;
  bool truncated = false;
  // Cumulative retained histograms after each iteration, per policy.
  std::vector<LabelHistogram> first_history, second_history;
};

// n rounds of: synthesize `size` queries, label them, run both retention
// filters over the one labeled stream. Usually a static and a dynamic
// policy, but any two policies work.
inline IterativeResult iterative_sample(const QueryGenerator& gen, QueryChannel& channel,
                                        const ThresholdPolicy& first_policy,
                                        const ThresholdPolicy& second_policy, int n,
                                        std::size_t size, std::uint64_t seed) {
  WAVEX_REQUIRE(n >= 1, "iterative_sample: n must be >= 1");
  WAVEX_REQUIRE(size >= 1, "iterative_sample: size must be >= 1");
  const int n_classes = channel.info().n_classes;
  ThresholdFilter f_first(first_policy, n_classes), f_second(second_policy, n_classes);
  IterativeResult r;
  const auto start_used = channel.used();
  for (int it = 0; it < n && !r.truncated; ++it) {
    auto waves = gen(size, derive_seed(seed, "sampling.iteration", static_cast<std::uint64_t>(it)));
    WAVEX_REQUIRE(waves.size() == size, "iterative_sample: generator returned wrong count");
    auto labeled = label_queries(channel, std::move(waves), r.truncated);
    for (const auto& q : labeled) {
      f_first.offer(q);
      f_second.offer(q);
    }
    r.first_history.push_back(f_first.retained().retained_counts);
    r.second_history.push_back(f_second.retained().retained_counts);
  }
  r.queries_used = channel.used() - start_used;
  r.first = std::move(f_first.retained());
  r.second = std::move(f_second.retained());
  for (auto* s : {&r.first, &r.second}) {
    s->queries_used = r.queries_used;
    s->truncated = r.truncated;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Persistence: manifest.csv + soft.f32 + waveforms.f32 + retained.json

inline void save_retained(const std::filesystem::path& dir, const RetainedSet& s) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.csv");
  std::ofstream soft(dir / "soft.f32", std::ios::binary);
  std::ofstream waves(dir / "waveforms.f32", std::ios::binary);
  if (!manifest || !soft || !waves) throw IoError("save_retained: cannot write " + dir.string());
  manifest << "index,label,soft_offset\n";
  std::int64_t soft_off = 0;
  std::size_t wave_len = s.records.empty() ? 0 : s.records.front().wave.size();
  int rate = s.records.empty() ? kCanonicalSampleRate : s.records.front().wave.sample_rate;
  std::size_t soft_width = s.records.empty() ? 0 : s.records.front().soft.size();
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const auto& r = s.records[i];
    if (r.wave.size() != wave_len || r.soft.size() != soft_width)
      throw PreconditionError("save_retained: records must share length and label width");
    manifest << i << ',' << r.label << ',' << (soft_width ? soft_off : -1) << '\n';
    waves.write(reinterpret_cast<const char*>(r.wave.samples.data()),
                static_cast<std::streamsize>(wave_len * sizeof(float)));
    soft.write(reinterpret_cast<const char*>(r.soft.data()),
               static_cast<std::streamsize>(soft_width * sizeof(float)));
    soft_off += static_cast<std::int64_t>(soft_width);
  }
  nlohmann::json meta = {{"count", s.records.size()},
                         {"wave_len", wave_len},
                         {"sample_rate", rate},
                         {"soft_width", soft_width},
                         {"discarded", s.discarded},
                         {"queries_used", s.queries_used},
                         {"truncated", s.truncated},
                         {"retained_counts", s.retained_counts.counts}};
  std::ofstream(dir / "retained.json") << meta.dump(2) << '\n';
}

inline RetainedSet load_retained(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "retained.json");
  if (!meta_in) throw IoError("load_retained: missing retained.json in " + dir.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("load_retained: bad retained.json: ") + e.what());
  }
  RetainedSet s;
  const auto count = meta.at("count").get<std::size_t>();
  const auto wave_len = meta.at("wave_len").get<std::size_t>();
  const auto soft_width = meta.at("soft_width").get<std::size_t>();
  const int rate = meta.at("sample_rate").get<int>();
  s.discarded = meta.at("discarded").get<std::int64_t>();
  s.queries_used = meta.at("queries_used").get<std::int64_t>();
  s.truncated = meta.at("truncated").get<bool>();
  s.retained_counts.counts = meta.at("retained_counts").get<std::vector<std::int64_t>>();

  std::ifstream manifest(dir / "manifest.csv");
  std::ifstream soft(dir / "soft.f32", std::ios::binary);
  std::ifstream waves(dir / "waveforms.f32", std::ios::binary);
  if (!manifest || !soft || !waves) throw IoError("load_retained: incomplete archive in " + dir.string());
  std::string line;
  std::getline(manifest, line);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(manifest, line)) throw IoError("load_retained: manifest too short");
    std::istringstream row(line);
    std::string idx, label, off;
    std::getline(row, idx, ',');
    std::getline(row, label, ',');
    std::getline(row, off, ',');
    LabeledQuery q;
    q.label = std::stoi(label);
    std::vector<float> w(wave_len);
    waves.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(wave_len * sizeof(float)));
    q.soft.resize(soft_width);
    if (soft_width) {
      soft.seekg(static_cast<std::streamoff>(std::stoll(off)) * static_cast<std::streamoff>(sizeof(float)));
      soft.read(reinterpret_cast<char*>(q.soft.data()),
                static_cast<std::streamsize>(soft_width * sizeof(float)));
    }
    if (!waves || !soft) throw IoError("load_retained: truncated data files");
    q.wave = Waveform(std::move(w), rate);
    s.records.push_back(std::move(q));
  }
  return s;
}

}  // namespace wavex
