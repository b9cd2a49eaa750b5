// include/wavex/harness.hpp

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

// Config-driven experiment runner. One JSON document describes an
// experiment; every artifact lands under its output directory:
//
//   victim.ckpt, victim.json          train-victim
//   victim_reverse.ckpt               train-victim --reverse
//   gan_proxy.ckpt, gan_victim.ckpt   train-gan (corpus chosen by gan.train_on)
//   ledger.csv                        one row per extraction run
//   runs/<run_id>.json                config, seed and result of each run
//   plots/                            PNG + CSV figures

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/checkpoint.hpp"
#include "wavex/corpus.hpp"
#include "wavex/extraction.hpp"
#include "wavex/interpret.hpp"
#include "wavex/oracle.hpp"
#include "wavex/oracle_http.hpp"
#include "wavex/plot.hpp"
#include "wavex/train.hpp"
#include "wavex/wavegan.hpp"

namespace wavex::harness {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitTruncated = 3;

// A required artifact (checkpoint) is absent.
class MissingArtifact : public ConfigError {
 public:
  MissingArtifact(const fs::path& path, const std::string& hint)
      : ConfigError("missing " + path.string() + "; " + hint) {}
};

// ---------------------------------------------------------------------------
// Configuration

struct CorpusSpec {
  std::string kind = "synth";  // synth | directory
  int speakers = 16;
  int per_speaker = 50;
  double duration_s = 0.3;
  int sample_rate = kCanonicalSampleRate;
  std::string root;  // directory kind
  SplitRatios ratios;
};

inline CorpusSpec synth_spec(int speakers, int per_speaker, double duration_s) {
  CorpusSpec c;
  c.speakers = speakers;
  c.per_speaker = per_speaker;
  c.duration_s = duration_s;
  return c;
}

inline void to_json(json& j, const CorpusSpec& c) {
  j = {{"kind", c.kind},
       {"speakers", c.speakers},
       {"per_speaker", c.per_speaker},
       {"duration_s", c.duration_s},
       {"sample_rate", c.sample_rate},
       {"root", c.root},
       {"ratios", {c.ratios.train, c.ratios.val, c.ratios.test}}};
}

inline void from_json(const json& j, CorpusSpec& c) {
  const CorpusSpec d;
  c.kind = j.value("kind", d.kind);
  if (c.kind != "synth" && c.kind != "directory") throw ConfigError("corpus kind must be synth or directory");
  c.speakers = j.value("speakers", d.speakers);
  c.per_speaker = j.value("per_speaker", d.per_speaker);
  c.duration_s = j.value("duration_s", d.duration_s);
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.root = j.value("root", d.root);
  if (j.contains("ratios")) {
    const auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw ConfigError("corpus ratios must be [train, val, test]");
    c.ratios = {r[0], r[1], r[2]};
  }
  if (c.kind == "directory" && c.root.empty()) throw ConfigError("directory corpus needs a root");
}

inline SpeakerCorpus build_corpus(const CorpusSpec& s, std::uint64_t seed, std::string_view component) {
  if (s.kind == "synth") {
    SynthOptions opt;
    opt.sample_rate = s.sample_rate;
    opt.ratios = s.ratios;
    return synth_corpus(s.speakers, s.per_speaker, s.duration_s, derive_seed(seed, component), opt);
  }
  LayoutSpec layout;
  layout.ratios = s.ratios;
  layout.split_seed = derive_seed(seed, component);
  auto c = ingest_directory(s.root, layout);
  for (auto& e : c.examples)
    if (e.wave.sample_rate != s.sample_rate) e.wave = resample(e.wave, s.sample_rate);
  return c;
}

struct GanSpec {
  WaveGANConfig config;
  std::int64_t steps = 200;
  std::int64_t checkpoint_every = 0;
  std::string train_on = "proxy";  // proxy | victim
};

struct T4Spec {
  std::vector<int> n_values{1, 5};
  std::size_t size = 400;
  std::vector<std::int64_t> alphas{10, 20};
  std::vector<double> betas{1.0, 2.0};
};

struct E3Spec {
  std::vector<int> k_values{0, 1, 2, 3, 4, 5, 6};
  int repeats = 3;
  bool freeze = false;
  int epochs = 4;
  CorpusSpec cross_corpus = synth_spec(64, 12, 0.3);
};

struct TableSpec {
  int epochs = 20;
  std::size_t t1_subset = 120;
  std::size_t t2_volume = 120;
  std::size_t gan_volume = 0;  // naive generator rows; 0 = proxy corpus size
  std::vector<std::string> t3_generators{"proxy"};
  T4Spec t4;
  E3Spec e3;
};

struct InterpretSpec {
  std::vector<int> layers{1, 2, 3, 4};
  OctaveSchedule schedule;
  std::string other_checkpoint;  // match-filters partner
  int sweep_points = 64;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  std::uint64_t seed = 1;
  fs::path out_dir = "runs/experiment";
  CorpusSpec victim_corpus;
  CorpusSpec proxy_corpus = synth_spec(80, 10, 0.3);
  KnaggCNNConfig model;  // n_classes follows the victim corpus
  TrainConfig victim_train;
  LabelMode label_mode = LabelMode::soft;
  std::optional<std::int64_t> budget;
  std::string host = "127.0.0.1";
  int port = 8765;
  GanSpec gan;
  ExtractionRun attack;
  std::string attack_pool = "proxy";  // proxy | victim
  int eval_windows = 4;
  TableSpec tables;
  InterpretSpec interpret;
  int parallel = 1;
  json raw;

  fs::path path(const std::string& name) const { return out_dir / name; }
  fs::path ledger() const { return path("ledger.csv"); }
  fs::path plots() const { return path("plots"); }
};

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  try {
    c.raw = j;
    c.experiment_id = j.value("experiment_id", c.experiment_id);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", "runs/" + c.experiment_id);
    if (j.contains("victim")) {
      const auto& v = j.at("victim");
      if (v.contains("corpus")) c.victim_corpus = v.at("corpus").get<CorpusSpec>();
      if (v.contains("model")) c.model = v.at("model").get<KnaggCNNConfig>();
      if (v.contains("train")) c.victim_train = v.at("train").get<TrainConfig>();
    }
    if (j.contains("proxy")) c.proxy_corpus = j.at("proxy").at("corpus").get<CorpusSpec>();
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.label_mode = label_mode_from_string(o.value("label_mode", std::string("soft")));
      if (o.contains("budget") && !o.at("budget").is_null()) c.budget = o.at("budget").get<std::int64_t>();
      c.host = o.value("host", c.host);
      c.port = o.value("port", c.port);
    }
    if (j.contains("gan")) {
      const auto& g = j.at("gan");
      if (g.contains("config")) c.gan.config = g.at("config").get<WaveGANConfig>();
      c.gan.steps = g.value("steps", c.gan.steps);
      c.gan.checkpoint_every = g.value("checkpoint_every", c.gan.checkpoint_every);
      c.gan.train_on = g.value("train_on", c.gan.train_on);
      if (c.gan.train_on != "proxy" && c.gan.train_on != "victim")
        throw ConfigError("gan.train_on must be proxy or victim");
    }
    // Training defaults follow the label mode: soft responses are distilled.
    c.attack.tc.loss = c.label_mode == LabelMode::soft ? LossKind::soft_ce : LossKind::hard_ce;
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      c.attack.run_id = a.value("run_id", std::string("attack"));
      c.attack.source_name = a.value("label", std::string());
      if (a.contains("source")) c.attack.source = a.at("source").get<QuerySource>();
      if (a.contains("train")) {
        const auto loss = c.attack.tc.loss;
        c.attack.tc = a.at("train").get<TrainConfig>();
        if (!a.at("train").contains("loss")) c.attack.tc.loss = loss;
      }
      if (a.contains("layer_mask")) {
        const auto& m = a.at("layer_mask");
        c.attack.layer_mask = LayerMask{m.value("transfer_upto", 0), m.value("freeze", false)};
      }
      c.attack_pool = a.value("pool", c.attack_pool);
      if (c.attack_pool != "proxy" && c.attack_pool != "victim")
        throw ConfigError("attack.pool must be proxy or victim");
    }
    c.eval_windows = j.value("eval_windows", c.eval_windows);
    if (c.eval_windows < 1) throw ConfigError("eval_windows must be >= 1");
    if (j.contains("tables")) {
      const auto& t = j.at("tables");
      c.tables.epochs = t.value("epochs", c.tables.epochs);
      c.tables.t1_subset = t.value("t1_subset", c.tables.t1_subset);
      c.tables.t2_volume = t.value("t2_volume", c.tables.t2_volume);
      c.tables.gan_volume = t.value("gan_volume", c.tables.gan_volume);
      c.tables.t3_generators = t.value("t3_generators", c.tables.t3_generators);
      if (t.contains("t4")) {
        const auto& t4 = t.at("t4");
        c.tables.t4.n_values = t4.value("n_values", c.tables.t4.n_values);
        c.tables.t4.size = t4.value("size", c.tables.t4.size);
        c.tables.t4.alphas = t4.value("alphas", c.tables.t4.alphas);
        c.tables.t4.betas = t4.value("betas", c.tables.t4.betas);
      }
      if (t.contains("e3")) {
        const auto& e = t.at("e3");
        c.tables.e3.k_values = e.value("k_values", c.tables.e3.k_values);
        c.tables.e3.repeats = e.value("repeats", c.tables.e3.repeats);
        c.tables.e3.freeze = e.value("freeze", c.tables.e3.freeze);
        c.tables.e3.epochs = e.value("epochs", c.tables.e3.epochs);
        if (e.contains("cross_corpus")) c.tables.e3.cross_corpus = e.at("cross_corpus").get<CorpusSpec>();
      }
    }
    if (j.contains("interpret")) {
      const auto& i = j.at("interpret");
      c.interpret.layers = i.value("layers", c.interpret.layers);
      if (i.contains("schedule")) c.interpret.schedule = i.at("schedule").get<OctaveSchedule>();
      c.interpret.other_checkpoint = i.value("other_checkpoint", c.interpret.other_checkpoint);
      c.interpret.sweep_points = i.value("sweep_points", c.interpret.sweep_points);
      c.interpret.seed = i.value("seed", c.interpret.seed);
    }
    c.parallel = j.value("parallel", c.parallel);
    if (c.parallel < 1) throw ConfigError("parallel must be >= 1");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.victim_train.validate();
  c.attack.tc.validate();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Shared state for a run: corpora, victim and the evaluation set.

struct Roles {
  bool reverse = false;
  std::string victim_checkpoint() const { return reverse ? "victim_reverse.ckpt" : "victim.ckpt"; }
  // GAN trained on the attacker's pool, and on the victim's own data.
  std::string attacker_gan() const { return reverse ? "gan_victim.ckpt" : "gan_proxy.ckpt"; }
  std::string oracle_data_gan() const { return reverse ? "gan_proxy.ckpt" : "gan_victim.ckpt"; }
};

struct Lab {
  ExperimentConfig cfg;
  Roles roles;
  SpeakerCorpus victim_data;    // the victim's corpus, all splits
  SpeakerCorpus attacker_data;  // proxy held by the attacker
  std::shared_ptr<const KnaggCNN<float>> victim;
  EvalSet eval;
  LabelHistogram victim_train_counts;

  KnaggCNNConfig surrogate_config() const { return victim->config(); }
};

inline std::pair<SpeakerCorpus, SpeakerCorpus> load_corpora(const ExperimentConfig& cfg, const Roles& roles) {
  auto a = build_corpus(cfg.victim_corpus, cfg.seed, "harness.victim_corpus");
  auto b = build_corpus(cfg.proxy_corpus, cfg.seed, "harness.proxy_corpus");
  if (roles.reverse) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

inline KnaggCNNConfig victim_model_config(const ExperimentConfig& cfg, const SpeakerCorpus& victim_data) {
  auto m = cfg.model;
  m.n_classes = victim_data.n_speakers;
  m.validate();
  return m;
}

inline EvalSet make_eval_set(const KnaggCNN<float>& victim, const SpeakerCorpus& victim_data, int windows,
                             std::uint64_t seed) {
  EvalSet ev;
  Rng rng(derive_seed(seed, "harness.eval"));
  const auto len = static_cast<std::size_t>(victim.config().input_len);
  for (const auto& e : victim_data.only(Split::test).examples)
    for (int w = 0; w < windows; ++w) {
      ev.waves.push_back(random_window(e.wave, len, rng));
      ev.truth.push_back(e.speaker);
    }
  if (ev.waves.empty()) throw ConfigError("victim corpus has no test split");
  ev.victim_labels = predict_labels(victim, ev.waves);
  ev.unique_victim_train = static_cast<std::int64_t>(histogram(victim_data.only(Split::train)).nonzero());
  return ev;
}

inline Lab open_lab(const ExperimentConfig& cfg, Roles roles = {}) {
  Lab lab;
  lab.cfg = cfg;
  lab.roles = roles;
  const auto ckpt = cfg.path(roles.victim_checkpoint());
  if (!fs::exists(ckpt))
    throw MissingArtifact(ckpt, std::string("run `wavex train-victim") + (roles.reverse ? " --reverse" : "") +
                                    " --config <this config>` first");
  std::tie(lab.victim_data, lab.attacker_data) = load_corpora(cfg, roles);
  lab.victim = std::make_shared<const KnaggCNN<float>>(load_classifier(ckpt));
  if (lab.victim->n_classes() != lab.victim_data.n_speakers)
    throw ConfigError("victim checkpoint class count does not match the victim corpus");
  lab.eval = make_eval_set(*lab.victim, lab.victim_data, cfg.eval_windows, cfg.seed);
  lab.victim_train_counts = histogram(lab.victim_data.only(Split::train));
  return lab;
}

inline std::unique_ptr<OracleSession<float>> new_session(const Lab& lab) {
  OracleOptions o;
  o.mode = lab.cfg.label_mode;
  o.budget = lab.cfg.budget;
  o.keep_log = false;
  auto s = std::make_unique<OracleSession<float>>(lab.victim, o);
  s->set_sample_rate(lab.cfg.victim_corpus.sample_rate);
  return s;
}

inline std::shared_ptr<Generator<float>> load_generator(const ExperimentConfig& cfg, const std::string& name) {
  const auto path = cfg.path(name);
  if (!fs::exists(path)) {
    const std::string corpus = name == "gan_proxy.ckpt" ? "proxy" : "victim";
    throw MissingArtifact(path, "run `wavex train-gan --config <this config>` with gan.train_on = \"" + corpus +
                                    "\" first");
  }
  return std::make_shared<Generator<float>>(load_wavegan(path).gen);
}

inline QueryGenerator generator_source(std::shared_ptr<Generator<float>> g) {
  return [g](std::size_t count, std::uint64_t seed) { return sample_generator(*g, count, seed); };
}

// ---------------------------------------------------------------------------
// Rows

struct Row {
  ExtractionRun run;
  AttackMaterial material;
};

struct RowResult {
  LedgerRow ledger;
  ExtractionResult result;
};

inline void write_run_record(const ExperimentConfig& cfg, const ExtractionRun& run, const ExtractionResult& r) {
  json j = {{"experiment_id", cfg.experiment_id},
            {"global_seed", cfg.seed},
            {"run_id", run.run_id},
            {"label", run.label()},
            {"seed", run.seed},
            {"source", run.source},
            {"train", run.tc},
            {"surrogate", run.surrogate},
            {"volume", r.coverage.volume},
            {"queries_used", r.queries_used},
            {"truncated", r.truncated},
            {"coverage", r.coverage.ratio},
            {"unique_predicted", r.coverage.unique_predicted},
            {"test_accuracy", r.report.test_accuracy},
            {"agreement", r.report.agreement}};
  if (run.layer_mask) j["layer_mask"] = {{"transfer_upto", run.layer_mask->transfer_upto}, {"freeze", run.layer_mask->freeze}};
  json hist = json::array();
  for (const auto& h : r.retained_history) hist.push_back(h.counts);
  j["retained_history"] = hist;
  const auto path = cfg.path("runs") / (run.run_id + ".json");
  fs::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << '\n';
}

// Runs rows (up to cfg.parallel at a time, each with its own oracle
// session) and appends them to the ledger in row order.
inline std::vector<RowResult> run_rows(const Lab& lab, const std::vector<Row>& rows) {
  std::vector<std::optional<RowResult>> out(rows.size());
  auto one = [&](std::size_t i) {
    auto session = new_session(lab);
    auto r = run_extraction(rows[i].run, *session, rows[i].material, lab.eval);
    out[i] = RowResult{ledger_row(rows[i].run, r), std::move(r)};
  };
  const auto workers = static_cast<std::size_t>(lab.cfg.parallel);
  if (workers <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) one(i);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < rows.size(); i += workers) one(i);
      }));
    for (auto& j : jobs) j.get();
  }
  std::vector<RowResult> results;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    append_ledger(lab.cfg.ledger(), out[i]->ledger);
    write_run_record(lab.cfg, rows[i].run, out[i]->result);
    results.push_back(std::move(*out[i]));
  }
  return results;
}

inline ExtractionRun base_run(const Lab& lab, const std::string& table, const std::string& id, const std::string& label) {
  ExtractionRun r;
  r.run_id = lab.cfg.experiment_id + "." + table + "." + id;
  r.source_name = label;
  r.surrogate = lab.surrogate_config();
  r.tc = lab.cfg.attack.tc;
  r.tc.epochs = lab.cfg.tables.epochs;
  r.seed = derive_seed(lab.cfg.seed, r.run_id);
  return r;
}

inline Row pool_row(const Lab& lab, const std::string& table, const std::string& id, const std::string& label,
                    std::vector<Waveform> pool, QuerySource src = {}) {
  Row row{base_run(lab, table, id, label), {}};
  row.run.source = src;
  row.material.proxy = std::move(pool);
  return row;
}

inline Row generator_row(const Lab& lab, const std::string& table, const std::string& id, const std::string& label,
                         std::shared_ptr<Generator<float>> gen, ThresholdPolicy policy, int iterations,
                         std::size_t size) {
  Row row{base_run(lab, table, id, label), {}};
  row.run.source.kind = SourceKind::generator;
  row.run.source.policy = std::move(policy);
  row.run.source.iterations = iterations;
  row.run.source.size = size;
  row.material.generator = generator_source(std::move(gen));
  return row;
}

inline QuerySource augmented(AugmentKind kind, double a, double sigma, double p) {
  QuerySource s;
  s.kind = SourceKind::augmented;
  s.augment.kind = kind;
  s.augment.a = a;
  s.augment.sigma = sigma;
  s.augment.p = p;
  return s;
}

// t1: augmentation baselines on the attacker's proxy pool.
inline std::vector<Row> t1_rows(const Lab& lab) {
  const auto proxy = lab.attacker_data.waves();
  const auto sub = subset(lab.attacker_data, RandomSubset{std::min(lab.cfg.tables.t1_subset, proxy.size())},
                          derive_seed(lab.cfg.seed, "t1.subset"));
  QuerySource noise;
  noise.kind = SourceKind::noise;
  noise.size = proxy.size();
  return {
      pool_row(lab, "t1", "proxy_full", "proxy (full)", proxy),
      pool_row(lab, "t1", "proxy_subset", "proxy (subset)", sub.waves()),
      pool_row(lab, "t1", "amp_a0.2_p1", "amplify a=0.2 p=1", proxy, augmented(AugmentKind::amplify, 0.2, 1, 1.0)),
      pool_row(lab, "t1", "amp_a0.5_p0.5", "amplify a=0.5 p=0.5", proxy, augmented(AugmentKind::amplify, 0.5, 1, 0.5)),
      pool_row(lab, "t1", "amp_a0.2_p0.5", "amplify a=0.2 p=0.5", proxy, augmented(AugmentKind::amplify, 0.2, 1, 0.5)),
      pool_row(lab, "t1", "pitch_s1_p1", "pitch sigma=1 p=1", proxy, augmented(AugmentKind::pitch_shift, 0.2, 1, 1.0)),
      pool_row(lab, "t1", "pitch_s1_p0.5", "pitch sigma=1 p=0.5", proxy, augmented(AugmentKind::pitch_shift, 0.2, 1, 0.5)),
      pool_row(lab, "t1", "interpolation", "interpolation", proxy, augmented(AugmentKind::interpolate, 0.2, 1, 1.0)),
      pool_row(lab, "t1", "noise", "gaussian noise", {}, noise),
  };
}

// t2: coverage versus volume.
inline std::vector<Row> t2_rows(const Lab& lab) {
  const auto train = lab.victim_data.only(Split::train);
  const std::size_t v = std::min(lab.cfg.tables.t2_volume, train.size());
  const int half = std::max(1, train.n_speakers / 2);
  const auto seed = derive_seed(lab.cfg.seed, "t2.subset");
  // Small corpora may not hold `v` clips within the first speakers.
  std::size_t half_pool = 0;
  for (const auto& e : train.examples) half_pool += e.speaker < half;
  return {
      pool_row(lab, "t2", "diverse", "victim data (diverse subset)", subset(train, DiverseSubset{v}, seed).waves()),
      pool_row(lab, "t2", "few_speakers", "victim data (" + std::to_string(half) + " speakers)",
               subset(train, FirstKSpeakers{half, std::min(v, half_pool)}, seed).waves()),
      pool_row(lab, "t2", "proxy_full", "proxy (full)", lab.attacker_data.waves()),
      pool_row(lab, "t2", "proxy_subset", "proxy (subset)",
               subset(lab.attacker_data, RandomSubset{std::min(v, lab.attacker_data.size())}, seed).waves()),
  };
}

inline std::size_t gan_volume(const Lab& lab) {
  return lab.cfg.tables.gan_volume ? lab.cfg.tables.gan_volume : lab.attacker_data.size();
}

// t3: proxy, victim data and naive generator sampling.
inline std::vector<Row> t3_rows(const Lab& lab) {
  std::vector<Row> rows{
      pool_row(lab, "t3", "proxy", "proxy (full)", lab.attacker_data.waves()),
      pool_row(lab, "t3", "victim_data", "victim data", lab.victim_data.only(Split::train).waves()),
  };
  for (const auto& which : lab.cfg.tables.t3_generators) {
    if (which != "proxy" && which != "victim") throw ConfigError("t3_generators entries must be proxy or victim");
    const bool attacker = which == "proxy";
    auto g = load_generator(lab.cfg, attacker ? lab.roles.attacker_gan() : lab.roles.oracle_data_gan());
    rows.push_back(generator_row(lab, "t3", "gan_" + which, attacker ? "GAN on proxy" : "GAN on victim data", g,
                                 ThresholdPolicy::none(), 1, gan_volume(lab)));
  }
  return rows;
}

inline std::vector<ThresholdPolicy> t4_policies(const Lab& lab) {
  std::vector<ThresholdPolicy> out;
  for (double b : lab.cfg.tables.t4.betas) out.push_back(ThresholdPolicy::scaled_cap(b, lab.victim_train_counts));
  for (auto a : lab.cfg.tables.t4.alphas) out.push_back(ThresholdPolicy::fixed_cap(a));
  return out;
}

inline std::string policy_tag(const ThresholdPolicy& p) {
  std::ostringstream s;
  if (p.kind == ThresholdPolicy::Kind::scaled) s << "beta" << p.beta;
  else if (p.kind == ThresholdPolicy::Kind::fixed) s << "alpha" << p.alpha;
  else s << "none";
  return s.str();
}

// t4: thresholded, iterative generator sampling.
inline std::vector<Row> t4_rows(const Lab& lab) {
  auto g = load_generator(lab.cfg, lab.roles.attacker_gan());
  std::vector<Row> rows;
  for (int n : lab.cfg.tables.t4.n_values)
    for (const auto& p : t4_policies(lab))
      rows.push_back(generator_row(lab, "t4", "n" + std::to_string(n) + "_" + policy_tag(p),
                                   "GAN n=" + std::to_string(n) + " " + p.describe(), g, p, n,
                                   lab.cfg.tables.t4.size));
  return rows;
}

// Coverage versus n per policy, and the retained histogram of each row.
inline void t4_plots(const Lab& lab, const std::vector<Row>& rows, const std::vector<RowResult>& res,
                     const std::string& prefix) {
  const auto policies = t4_policies(lab);
  std::vector<plot::Series> cov;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    plot::Series s{policy_tag(policies[p]), {}, {}};
    for (std::size_t n = 0; n < lab.cfg.tables.t4.n_values.size(); ++n) {
      const auto& r = res[n * policies.size() + p];
      s.x.push_back(lab.cfg.tables.t4.n_values[n]);
      s.y.push_back(r.result.coverage.ratio);
    }
    cov.push_back(std::move(s));
  }
  plot::line_plot(lab.cfg.plots() / (prefix + "_coverage_vs_n"), cov, "n", "coverage");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& hist = res[i].result.retained_history;
    std::vector<plot::Series> bars;
    for (std::size_t it = 0; it < hist.size(); ++it) {
      plot::Series s{"iteration" + std::to_string(it + 1), {}, {}};
      for (std::size_t l = 0; l < hist[it].counts.size(); ++l) {
        s.x.push_back(double(l));
        s.y.push_back(double(hist[it].counts[l]));
      }
      bars.push_back(std::move(s));
    }
    if (!bars.empty()) plot::bar_plot(lab.cfg.plots() / (prefix + "_retained_" + rows[i].run.run_id), bars, "label", "retained");
  }
}

struct LayerCurve {
  std::string donor;
  std::vector<LayerPoint> points;
};

// Layer-wise transfer: a same-task donor (the victim) and a donor trained on
// another speaker set.
inline std::vector<LayerCurve> run_e3(const Lab& lab) {
  const auto& e = lab.cfg.tables.e3;
  auto cross_data = build_corpus(e.cross_corpus, lab.cfg.seed, "harness.e3.cross_corpus");
  auto ccfg = lab.surrogate_config();
  ccfg.n_classes = cross_data.n_speakers;
  KnaggCNN<float> cross(ccfg, derive_seed(lab.cfg.seed, "harness.e3.cross_model"));
  TrainConfig tc = lab.cfg.victim_train;
  tc.seed = derive_seed(lab.cfg.seed, "harness.e3.cross_train");
  train_classifier(cross, LabeledSet::from_corpus(cross_data.only(Split::train)), tc);

  ExtractionRun base = base_run(lab, "e3", "layerwise", "proxy (full)");
  base.tc.epochs = e.epochs;
  AttackMaterial m;
  m.proxy = lab.attacker_data.waves();
  std::vector<LayerCurve> out;
  for (const auto& [name, donor] : {std::pair<std::string, const KnaggCNN<float>*>{"same_task", lab.victim.get()},
                                    std::pair<std::string, const KnaggCNN<float>*>{"cross_task", &cross}}) {
    m.donor = donor;
    auto session = new_session(lab);
    out.push_back({name, layerwise_experiment(base, *session, m, lab.eval, e.k_values, e.freeze, e.repeats)});
  }
  const auto csv = lab.cfg.path("e3.csv");
  std::ofstream f(csv);
  f << "donor,k,test_acc,agreement\n";
  std::vector<plot::Series> series;
  for (const auto& c : out) {
    plot::Series s{c.donor, {}, {}};
    for (const auto& p : c.points) {
      f << c.donor << ',' << p.k << ',' << p.test_accuracy << ',' << p.agreement << '\n';
      s.x.push_back(p.k);
      s.y.push_back(p.test_accuracy);
    }
    series.push_back(std::move(s));
  }
  plot::line_plot(lab.cfg.plots() / "e3_accuracy_vs_layers", series, "k", "test_accuracy");
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct VictimRecord {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

inline VictimRecord cmd_train_victim(const ExperimentConfig& cfg, bool reverse = false) {
  const Roles roles{reverse};
  auto [victim_data, attacker_data] = load_corpora(cfg, roles);
  const auto mcfg = victim_model_config(cfg, victim_data);
  const auto model_seed = derive_seed(cfg.seed, reverse ? "harness.victim_reverse.init" : "harness.victim.init");
  KnaggCNN<float> m(mcfg, model_seed);
  TrainConfig tc = cfg.victim_train;
  tc.seed = derive_seed(cfg.seed, reverse ? "harness.victim_reverse.train" : "harness.victim.train");
  const auto train = victim_data.only(Split::train);
  const auto hist = train_classifier(m, LabeledSet::from_corpus(train), tc);
  const auto ev = make_eval_set(m, victim_data, cfg.eval_windows, cfg.seed);
  VictimRecord rec{hist.empty() ? 0.0 : hist.back().train_accuracy,
                   accuracy(m, std::span<const Waveform>(ev.waves), ev.truth), tc.epochs, cfg.seed};
  fs::create_directories(cfg.out_dir);
  save_classifier(cfg.path(roles.victim_checkpoint()), m, model_seed,
                  {{"test_accuracy", rec.test_accuracy}, {"experiment_id", cfg.experiment_id}});
  json j = {{"experiment_id", cfg.experiment_id}, {"seed", cfg.seed},          {"epochs", tc.epochs},
            {"train_accuracy", rec.train_accuracy}, {"test_accuracy", rec.test_accuracy},
            {"checkpoint", roles.victim_checkpoint()}, {"model", mcfg}};
  std::ofstream(cfg.path(reverse ? "victim_reverse.json" : "victim.json")) << j.dump(2) << '\n';
  return rec;
}

struct GanRecord {
  std::string checkpoint;
  std::int64_t steps = 0;
  double final_critic_loss = 0.0;
};

inline GanRecord cmd_train_gan(const ExperimentConfig& cfg) {
  auto [victim_data, proxy_data] = load_corpora(cfg, {});
  const auto& data = cfg.gan.train_on == "proxy" ? proxy_data : victim_data;
  auto gcfg = cfg.gan.config;
  gcfg.sample_rate = data.examples.empty() ? gcfg.sample_rate : data.examples.front().wave.sample_rate;
  gcfg.validate();
  const auto seed = derive_seed(cfg.seed, "harness.gan." + cfg.gan.train_on);
  Generator<float> g(gcfg, seed);
  Discriminator<float> d(gcfg, seed);
  const auto name = "gan_" + cfg.gan.train_on + ".ckpt";
  const auto path = cfg.path(name);
  fs::create_directories(cfg.out_dir);
  auto result = train_wavegan(g, d, data.only(Split::train).waves(), cfg.gan.steps, seed, cfg.gan.checkpoint_every,
                              [&](std::int64_t step) { save_wavegan(path, g, d, seed, step); });
  save_wavegan(path, g, d, seed, cfg.gan.steps);
  std::ofstream hist(cfg.path("gan_" + cfg.gan.train_on + "_history.csv"));
  hist << "step,critic_loss,penalty,generator_loss\n";
  for (const auto& h : result.history)
    hist << h.step << ',' << h.critic_loss << ',' << h.penalty << ',' << h.generator_loss << '\n';
  return {name, cfg.gan.steps, result.history.empty() ? 0.0 : result.history.back().critic_loss};
}

// Blocks until the process is stopped.
inline void cmd_serve_oracle(const ExperimentConfig& cfg) {
  const auto lab = open_lab(cfg);
  OracleOptions o;
  o.mode = cfg.label_mode;
  o.budget = cfg.budget;
  o.log_path = cfg.path("responses.ndjson").string();
  OracleSession<float> session(lab.victim, o);
  session.set_sample_rate(cfg.victim_corpus.sample_rate);
  OracleServer server(session);
  std::cerr << "serving " << cfg.experiment_id << " on http://" << cfg.host << ':' << cfg.port << '\n';
  server.run(cfg.host, cfg.port);
}

struct AttackOutcome {
  LedgerRow row;
  bool truncated = false;
  std::int64_t channel_used = 0;
};

// Runs `cfg.attack` in-process, or against a served oracle when `remote_url`
// is set. The attacker code only ever holds a QueryChannel.
inline AttackOutcome cmd_attack(const ExperimentConfig& cfg, const std::optional<std::string>& remote_url = {}) {
  const auto lab = open_lab(cfg);
  ExtractionRun run = cfg.attack;
  run.run_id = cfg.experiment_id + "." + cfg.attack.run_id;
  run.surrogate = lab.surrogate_config();
  run.seed = derive_seed(cfg.seed, run.run_id);
  if (run.source.kind == SourceKind::generator && run.source.policy.kind == ThresholdPolicy::Kind::scaled &&
      run.source.policy.reference.size() == 0)
    run.source.policy.reference = lab.victim_train_counts;
  AttackMaterial m;
  m.proxy = cfg.attack_pool == "proxy" ? lab.attacker_data.waves() : lab.victim_data.only(Split::train).waves();
  if (run.source.kind == SourceKind::generator) m.generator = generator_source(load_generator(cfg, lab.roles.attacker_gan()));
  if (run.layer_mask && run.layer_mask->transfer_upto > 0) m.donor = lab.victim.get();

  std::unique_ptr<QueryChannel> channel;
  if (remote_url) channel = RemoteOracle::from_url(*remote_url);
  else channel = new_session(lab);
  auto r = run_extraction(run, *channel, m, lab.eval);
  const auto row = ledger_row(run, r);
  append_ledger(cfg.ledger(), row);
  write_run_record(cfg, run, r);
  save_classifier(cfg.path("surrogate_" + cfg.attack.run_id + ".ckpt"), r.surrogate, run.seed);
  return {row, r.truncated, channel->used()};
}

inline std::vector<LedgerRow> cmd_run_table(const ExperimentConfig& cfg, const std::string& table) {
  std::vector<LedgerRow> out;
  auto collect = [&](const std::vector<RowResult>& rs) {
    for (const auto& r : rs) out.push_back(r.ledger);
  };
  if (table == "t1" || table == "t2" || table == "t3") {
    const auto lab = open_lab(cfg);
    const auto rows = table == "t1" ? t1_rows(lab) : table == "t2" ? t2_rows(lab) : t3_rows(lab);
    collect(run_rows(lab, rows));
  } else if (table == "t4") {
    const auto lab = open_lab(cfg);
    const auto rows = t4_rows(lab);
    const auto res = run_rows(lab, rows);
    t4_plots(lab, rows, res, "t4");
    collect(res);
  } else if (table == "reverse") {
    const auto lab = open_lab(cfg, Roles{true});
    auto rows = t3_rows(lab);
    for (auto& r : rows) r.run.run_id = cfg.experiment_id + ".reverse." + r.run.run_id.substr(r.run.run_id.rfind('.') + 1);
    collect(run_rows(lab, rows));
    auto t4 = t4_rows(lab);
    for (auto& r : t4) r.run.run_id = cfg.experiment_id + ".reverse." + r.run.run_id.substr(cfg.experiment_id.size() + 1);
    const auto res = run_rows(lab, t4);
    t4_plots(lab, t4, res, "reverse_t4");
    collect(res);
  } else if (table == "e3") {
    const auto lab = open_lab(cfg);
    for (const auto& c : run_e3(lab))
      for (const auto& p : c.points)
        out.push_back({cfg.experiment_id + ".e3." + c.donor + ".k" + std::to_string(p.k), c.donor, 0, 0.0,
                       p.test_accuracy, p.agreement, cfg.tables.e3.epochs, cfg.seed});
  } else {
    throw ConfigError("unknown table " + table + " (t1, t2, t3, t4, reverse, e3)");
  }
  return out;
}

inline void cmd_visualize(const ExperimentConfig& cfg) {
  const auto lab = open_lab(cfg);
  const auto& spec = cfg.interpret;
  const int sr = cfg.victim_corpus.sample_rate;
  const auto freqs = linear_grid(20.0, sr / 2.0 - 1.0, spec.sweep_points);
  for (int layer : spec.layers) {
    auto vis = visualize_layer(*lab.victim, layer, spec.schedule, spec.seed, 0, sr);
    write_visualizations(cfg.path("visualize") / ("layer" + std::to_string(layer)), vis);
    std::vector<std::vector<SinePoint>> curves;
    std::vector<plot::Series> series;
    for (int f = 0; f < lab.victim->block_channels(layer); ++f) {
      curves.push_back(sine_response(*lab.victim, layer, f, freqs, 1.0, sr));
      plot::Series s{"filter" + std::to_string(f), {}, {}};
      for (const auto& p : curves.back()) {
        s.x.push_back(p.freq_hz);
        s.y.push_back(p.activation);
      }
      series.push_back(std::move(s));
    }
    write_sine_response_csv(cfg.path("visualize") / ("sine_response_layer" + std::to_string(layer) + ".csv"), layer, curves);
    plot::line_plot(cfg.plots() / ("sine_response_layer" + std::to_string(layer)), series, "freq_hz", "activation");
  }
}

inline std::vector<FilterMatch> cmd_match_filters(const ExperimentConfig& cfg) {
  const auto lab = open_lab(cfg);
  if (cfg.interpret.other_checkpoint.empty())
    throw ConfigError("interpret.other_checkpoint names the model to match against");
  fs::path other = cfg.interpret.other_checkpoint;
  if (other.is_relative()) other = cfg.out_dir / other;
  if (!fs::exists(other)) throw MissingArtifact(other, "train or extract the partner model first");
  const auto b = load_classifier(other);
  MatchOptions mo;
  mo.schedule = cfg.interpret.schedule;
  mo.seed = cfg.interpret.seed;
  mo.sample_rate = cfg.victim_corpus.sample_rate;
  std::vector<FilterMatch> out;
  std::ofstream summary(cfg.path("match_summary.csv"));
  summary << "layer,matched,excluded_a,mean_distance\n";
  for (int layer : cfg.interpret.layers) {
    auto m = match_filters(*lab.victim, b, layer, mo);
    write_match_csv(cfg.path("match") / ("layer" + std::to_string(layer) + ".csv"), m);
    summary << layer << ',' << m.pairs.size() << ',' << m.excluded_a.size() << ',' << m.mean_distance() << '\n';
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace wavex::harness
