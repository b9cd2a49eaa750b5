// include/wavex/extraction.hpp

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

// Learning-based extraction: build queries, label them through a
// QueryChannel, distil a surrogate. Only the channel is ever consulted for
// victim behaviour; evaluation data is handed in by the caller.

#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/augment.hpp"
#include "wavex/coverage.hpp"
#include "wavex/knagg_cnn.hpp"
#include "wavex/oracle_channel.hpp"
#include "wavex/sampling.hpp"
#include "wavex/train.hpp"

namespace wavex {

enum class SourceKind { proxy_corpus, augmented, generator, noise };

inline const char* to_string(SourceKind k) {
  switch (k) {
    case SourceKind::proxy_corpus: return "proxy_corpus";
    case SourceKind::augmented: return "augmented";
    case SourceKind::generator: return "generator";
    case SourceKind::noise: return "noise";
  }
  return "?";
}

inline SourceKind source_kind_from_string(const std::string& s) {
  if (s == "proxy_corpus") return SourceKind::proxy_corpus;
  if (s == "augmented") return SourceKind::augmented;
  if (s == "generator") return SourceKind::generator;
  if (s == "noise") return SourceKind::noise;
  throw ConfigError("unknown query source: " + s);
}

struct QuerySource {
  SourceKind kind = SourceKind::proxy_corpus;
  AugmentSpec augment;                         // augmented
  ThresholdPolicy policy;                      // generator
  int iterations = 1;                          // generator
  std::size_t size = 0;                        // generator: per iteration; else volume (0 = pool size)
  double noise_std = 0.1;                      // noise
};

inline void to_json(nlohmann::json& j, const QuerySource& s) {
  j = {{"kind", to_string(s.kind)}, {"size", s.size}};
  if (s.kind == SourceKind::augmented)
    j["augment"] = {{"kind", to_string(s.augment.kind)}, {"p", s.augment.p}, {"a", s.augment.a},
                    {"sigma", s.augment.sigma}, {"max_semitones", s.augment.max_semitones}};
  if (s.kind == SourceKind::generator) {
    j["policy"] = s.policy;
    j["iterations"] = s.iterations;
  }
  if (s.kind == SourceKind::noise) j["noise_std"] = s.noise_std;
}

inline void from_json(const nlohmann::json& j, QuerySource& s) {
  s = QuerySource{};
  s.kind = source_kind_from_string(j.value("kind", std::string("proxy_corpus")));
  s.size = j.value("size", std::size_t{0});
  if (j.contains("augment")) {
    const auto& a = j.at("augment");
    s.augment.kind = augment_kind_from_string(a.value("kind", std::string("amplify")));
    s.augment.p = a.value("p", s.augment.p);
    s.augment.a = a.value("a", s.augment.a);
    s.augment.sigma = a.value("sigma", s.augment.sigma);
    s.augment.max_semitones = a.value("max_semitones", s.augment.max_semitones);
  }
  if (j.contains("policy")) s.policy = j.at("policy").get<ThresholdPolicy>();
  s.iterations = j.value("iterations", 1);
  s.noise_std = j.value("noise_std", s.noise_std);
}

struct ExtractionRun {
  std::string run_id = "run";
  std::string source_name;  // ledger label; defaults to the source kind
  QuerySource source;
  KnaggCNNConfig surrogate;
  TrainConfig tc;
  std::optional<LayerMask> layer_mask;
  std::uint64_t seed = 0;

  std::string label() const { return source_name.empty() ? to_string(source.kind) : source_name; }
};

// What the attacker holds besides the channel.
struct AttackMaterial {
  std::vector<Waveform> proxy;              // proxy_corpus / augmented
  QueryGenerator generator;                 // generator
  const KnaggCNN<float>* donor = nullptr;   // white-box weights, only with a LayerMask
};

struct LabeledPool {
  std::vector<LabeledQuery> records;
  std::int64_t queries_used = 0;
  bool truncated = false;
  std::vector<LabelHistogram> retained_history;  // generator source, per iteration
};

// Fits a waveform to `len` samples: random window if longer, zero pad if
// shorter.
inline Waveform fit_length(const Waveform& w, std::size_t len, Rng& rng) {
  if (w.size() == len) return w;
  return random_window(w, len, rng);
}

// Queries for the non-generator sources.
inline std::vector<Waveform> build_queries(const QuerySource& src, const std::vector<Waveform>& proxy,
                                           const ChannelInfo& info, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "extraction.queries"));
  const std::size_t len = info.input_len;
  std::vector<Waveform> out;
  if (src.kind == SourceKind::noise) {
    const std::size_t volume = src.size ? src.size : proxy.size();
    WAVEX_REQUIRE(volume >= 1, "build_queries: noise source needs a volume");
    for (std::size_t i = 0; i < volume; ++i)
      out.push_back(gaussian_noise_query(len, src.noise_std, rng, info.sample_rate));
    return out;
  }
  WAVEX_REQUIRE(!proxy.empty(), "build_queries: empty proxy pool");
  const std::size_t volume = src.size ? src.size : proxy.size();
  out.reserve(volume);
  for (std::size_t i = 0; i < volume; ++i) out.push_back(fit_length(proxy[i % proxy.size()], len, rng));
  if (src.kind == SourceKind::augmented) {
    AugmentSpec spec = src.augment;
    Rng arng(derive_seed(seed, "extraction.augment"));
    out = augment_pool(spec, out, arng);
  }
  return out;
}

inline LabeledPool collect_labeled(const ExtractionRun& run, QueryChannel& channel,
                                   const AttackMaterial& material) {
  const auto info = channel.info();
  LabeledPool pool;
  if (run.source.kind == SourceKind::generator) {
    WAVEX_REQUIRE(static_cast<bool>(material.generator), "extraction: generator source needs a generator");
    WAVEX_REQUIRE(run.source.size >= 1, "extraction: generator source needs size >= 1");
    const std::size_t len = info.input_len;
    QueryGenerator fitted = [&](std::size_t count, std::uint64_t s) {
      auto waves = material.generator(count, s);
      Rng rng(derive_seed(s, "extraction.fit"));
      for (auto& w : waves) w = fit_length(w, len, rng);
      return waves;
    };
    auto r = iterative_sample(fitted, channel, run.source.policy, ThresholdPolicy::none(),
                              run.source.iterations, run.source.size,
                              derive_seed(run.seed, "extraction.generator"));
    pool.records = std::move(r.first.records);
    pool.queries_used = r.queries_used;
    pool.truncated = r.truncated;
    pool.retained_history = std::move(r.first_history);
    return pool;
  }
  const auto start = channel.used();
  pool.records = label_queries(channel, build_queries(run.source, material.proxy, info, run.seed),
                               pool.truncated);
  pool.queries_used = channel.used() - start;
  return pool;
}

inline LabeledSet to_labeled_set(const std::vector<LabeledQuery>& records, int n_classes) {
  LabeledSet s;
  for (const auto& r : records) {
    s.waves.push_back(r.wave);
    s.hard.push_back(r.label);
    if (!r.soft.empty()) {
      s.soft.push_back(r.soft);
    } else {
      std::vector<float> one_hot(static_cast<std::size_t>(n_classes), 0.0f);
      one_hot[static_cast<std::size_t>(r.label)] = 1.0f;
      s.soft.push_back(std::move(one_hot));
    }
  }
  return s;
}

struct TrainedSurrogate {
  KnaggCNN<float> model;
  std::vector<EpochMetrics> history;
};

using ModelEval = std::function<double(const KnaggCNN<float>&)>;

inline TrainedSurrogate train_surrogate(const ExtractionRun& run, const std::vector<LabeledQuery>& records,
                                        const KnaggCNN<float>* donor, const ModelEval& eval = {}) {
  WAVEX_REQUIRE(!records.empty(), "extraction: no labeled queries to train on");
  TrainedSurrogate out{KnaggCNN<float>(run.surrogate, derive_seed(run.seed, "extraction.surrogate")), {}};
  TrainConfig tc = run.tc;
  tc.seed = derive_seed(run.seed, "extraction.train");
  if (run.layer_mask && run.layer_mask->transfer_upto > 0) {
    if (donor == nullptr) throw ConfigError("extraction: layer mask given without donor weights");
    transfer_layers(out.model, *donor, *run.layer_mask);
    if (run.layer_mask->freeze) tc.frozen_layers = run.layer_mask->transfer_upto;
  }
  EvalHook hook;
  if (eval) hook = [&] { return eval(out.model); };
  out.history = train_classifier(out.model, to_labeled_set(records, run.surrogate.n_classes), tc, hook);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation (harness side)

struct EvalSet {
  std::vector<Waveform> waves;      // victim's test split, input_len each
  std::vector<int> truth;           // ground-truth speaker ids
  std::vector<int> victim_labels;   // victim argmax on the same waves
  std::int64_t unique_victim_train = 0;
};

struct AgreementReport {
  double test_accuracy = 0.0;
  double agreement = 0.0;
};

inline AgreementReport agreement(const KnaggCNN<float>& surrogate, const EvalSet& eval) {
  WAVEX_REQUIRE(!eval.waves.empty(), "agreement: empty evaluation set");
  const auto pred = predict_labels(surrogate, eval.waves);
  std::size_t ok = 0, agree = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ok += pred[i] == eval.truth[i];
    agree += pred[i] == eval.victim_labels[i];
  }
  return {double(ok) / double(pred.size()), double(agree) / double(pred.size())};
}

struct ExtractionResult {
  KnaggCNN<float> surrogate;
  AgreementReport report;
  CoverageReport coverage;
  std::int64_t queries_used = 0;
  bool truncated = false;
  std::vector<EpochMetrics> history;
  std::vector<LabelHistogram> retained_history;
};

inline ExtractionResult finish_extraction(const ExtractionRun& run, LabeledPool pool,
                                          const AttackMaterial& material, const EvalSet& eval,
                                          bool per_epoch_eval = false) {
  std::vector<int> labels;
  for (const auto& r : pool.records) labels.push_back(r.label);
  const CoverageReport cov = coverage(labels, eval.unique_victim_train);
  ModelEval per_epoch;
  if (per_epoch_eval) per_epoch = [&](const KnaggCNN<float>& m) { return agreement(m, eval).test_accuracy; };
  auto ts = train_surrogate(run, pool.records, material.donor, per_epoch);
  ExtractionResult r{std::move(ts.model), {}, cov, pool.queries_used, pool.truncated,
                     std::move(ts.history), std::move(pool.retained_history)};
  r.report = agreement(r.surrogate, eval);
  return r;
}

inline ExtractionResult run_extraction(const ExtractionRun& run, QueryChannel& channel,
                                       const AttackMaterial& material, const EvalSet& eval,
                                       bool per_epoch_eval = false) {
  if (run.surrogate.n_classes != channel.info().n_classes)
    throw ConfigError("extraction: surrogate must have as many classes as the victim");
  if (static_cast<std::size_t>(run.surrogate.input_len) != channel.info().input_len)
    throw ConfigError("extraction: surrogate input length differs from the oracle's");
  return finish_extraction(run, collect_labeled(run, channel, material), material, eval, per_epoch_eval);
}

struct LayerPoint {
  int k = 0;
  double test_accuracy = 0.0;
  double agreement = 0.0;
};

// Accuracy versus number of donor layers given to the surrogate. Queries are
// labeled once and reused for every k. Each point averages `repeats`
// surrogate trainings with independent seeds.
inline std::vector<LayerPoint> layerwise_experiment(const ExtractionRun& base, QueryChannel& channel,
                                                    const AttackMaterial& material, const EvalSet& eval,
                                                    const std::vector<int>& k_values, bool freeze = false,
                                                    int repeats = 1) {
  WAVEX_REQUIRE(material.donor != nullptr, "layerwise_experiment: donor weights required");
  if (k_values.empty()) throw ConfigError("layerwise_experiment: no k values");
  if (repeats < 1) throw ConfigError("layerwise_experiment: repeats must be >= 1");
  const int deepest = *std::max_element(k_values.begin(), k_values.end());
  {
    KnaggCNN<float> probe(base.surrogate, 0);
    transfer_layers(probe, *material.donor, LayerMask{deepest, freeze});  // shape check only
  }
  auto pool = collect_labeled(base, channel, material);
  std::vector<LayerPoint> out;
  for (int k : k_values) {
    LayerPoint pt{k, 0.0, 0.0};
    for (int rep = 0; rep < repeats; ++rep) {
      ExtractionRun run = base;
      run.layer_mask = LayerMask{k, freeze};
      if (repeats > 1) run.seed = derive_seed(base.seed, "extraction.repeat", std::uint64_t(rep));
      auto ts = train_surrogate(run, pool.records, material.donor);
      const auto rep_eval = agreement(ts.model, eval);
      pt.test_accuracy += rep_eval.test_accuracy / repeats;
      pt.agreement += rep_eval.agreement / repeats;
    }
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results ledger

struct LedgerRow {
  std::string run_id;
  std::string source;
  std::int64_t volume = 0;
  double coverage = 0.0;
  double test_acc = 0.0;
  double agreement = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

inline LedgerRow ledger_row(const ExtractionRun& run, const ExtractionResult& r) {
  return {run.run_id, run.label(), r.coverage.volume, r.coverage.ratio, r.report.test_accuracy,
          r.report.agreement, run.tc.epochs, run.seed};
}

inline constexpr const char* kLedgerHeader = "run_id,source,volume,coverage,test_acc,agreement,epochs,seed";

inline void append_ledger(const std::filesystem::path& path, const LedgerRow& row) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to ledger " + path.string());
  if (fresh) out << kLedgerHeader << '\n';
  out << row.run_id << ',' << row.source << ',' << row.volume << ',' << row.coverage << ','
      << row.test_acc << ',' << row.agreement << ',' << row.epochs << ',' << row.seed << '\n';
}

}  // namespace wavex
