// tests/test_harness.cpp

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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "wavex/harness.hpp"

namespace wavex::harness {
namespace {

class TempOut {
 public:
  explicit TempOut(const std::string& name) : path_(fs::temp_directory_path() / name) { fs::remove_all(path_); }
  ~TempOut() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

json tiny_json(const fs::path& out) {
  auto j = json::parse(R"({
    "experiment_id": "tiny",
    "seed": 5,
    "eval_windows": 2,
    "victim": {
      "corpus": {"kind": "synth", "speakers": 4, "per_speaker": 10, "duration_s": 0.15},
      "model": {"input_len": 1024, "width_scale": 0.0625},
      "train": {"epochs": 3, "batch_size": 16}
    },
    "proxy": {"corpus": {"kind": "synth", "speakers": 6, "per_speaker": 5, "duration_s": 0.15}},
    "oracle": {"label_mode": "soft"},
    "attack": {"run_id": "proxy", "train": {"epochs": 2, "batch_size": 16}},
    "tables": {"epochs": 2}
  })");
  j["out_dir"] = out.string();
  return j;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

TEST(Config, DefaultsAndDerivedLoss) {
  auto c = parse_config(json::object());
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.out_dir, fs::path("runs/experiment"));
  EXPECT_EQ(c.label_mode, LabelMode::soft);
  EXPECT_EQ(c.attack.tc.loss, LossKind::soft_ce);
  EXPECT_FALSE(c.budget.has_value());
  auto h = parse_config(json{{"oracle", {{"label_mode", "hard"}, {"budget", 50}}}});
  EXPECT_EQ(h.attack.tc.loss, LossKind::hard_ce);
  EXPECT_EQ(*h.budget, 50);
}

TEST(Config, InvalidValuesAreConfigErrors) {
  for (const char* bad : {R"({"oracle": {"label_mode": "fuzzy"}})", R"({"eval_windows": 0})", R"({"parallel": 0})",
                          R"({"gan": {"train_on": "both"}})", R"({"victim": {"train": {"lr": -1}}})",
                          R"({"victim": {"corpus": {"kind": "tape"}}})", R"({"attack": {"pool": "oracle"}})",
                          R"({"attack": {"source": {"kind": "telepathy"}}})", R"({"seed": "five"})",
                          R"({"interpret": {"schedule": {"ratio": 0.5}}})"}) {
    EXPECT_THROW(parse_config(json::parse(bad)), ConfigError) << bad;
  }
}

TEST(Config, LoadRejectsMissingAndMalformedFiles) {
  TempOut t("wavex_cfg_files");
  fs::create_directories(t.path());
  EXPECT_THROW(load_config(t.path() / "absent.json"), ConfigError);
  std::ofstream(t.path() / "broken.json") << "{ \"seed\": ";
  EXPECT_THROW(load_config(t.path() / "broken.json"), ConfigError);
}

TEST(Commands, MissingVictimNamesTheFix) {
  TempOut t("wavex_missing_victim");
  const auto cfg = parse_config(tiny_json(t.path()));
  try {
    cmd_attack(cfg);
    FAIL() << "expected MissingArtifact";
  } catch (const MissingArtifact& e) {
    EXPECT_NE(std::string(e.what()).find("train-victim"), std::string::npos);
  }
  EXPECT_THROW(cmd_run_table(cfg, "t1"), MissingArtifact);
}

TEST(Commands, TrainVictimIsReproducible) {
  TempOut a("wavex_victim_a"), b("wavex_victim_b");
  const auto ra = cmd_train_victim(parse_config(tiny_json(a.path())));
  const auto rb = cmd_train_victim(parse_config(tiny_json(b.path())));
  EXPECT_EQ(ra.test_accuracy, rb.test_accuracy);
  EXPECT_EQ(slurp(a.path() / "victim.ckpt"), slurp(b.path() / "victim.ckpt"));
  EXPECT_TRUE(fs::exists(a.path() / "victim.json"));
  auto j = parse_config(tiny_json(b.path()));
  j.seed = 6;
  cmd_train_victim(j);
  EXPECT_NE(slurp(a.path() / "victim.ckpt"), slurp(b.path() / "victim.ckpt"));
}

class TrainedLab : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    out_ = new TempOut("wavex_trained_lab");
    cmd_train_victim(parse_config(tiny_json(out_->path())));
  }
  static void TearDownTestSuite() { delete out_; }
  static ExperimentConfig config() { return parse_config(tiny_json(out_->path())); }

  static TempOut* out_;
};
TempOut* TrainedLab::out_ = nullptr;

TEST_F(TrainedLab, AttackWritesLedgerAndRecord) {
  auto cfg = config();
  cfg.out_dir = out_->path();
  fs::remove(cfg.ledger());
  const auto r = cmd_attack(cfg);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.channel_used, 30);
  EXPECT_EQ(r.row.volume, 30);
  EXPECT_EQ(line_count(cfg.ledger()), 2u);
  EXPECT_TRUE(fs::exists(cfg.path("runs") / "tiny.proxy.json"));
  EXPECT_TRUE(fs::exists(cfg.path("surrogate_proxy.ckpt")));
}

TEST_F(TrainedLab, BudgetTruncatesAttack) {
  auto j = tiny_json(out_->path());
  j["oracle"]["budget"] = 12;
  const auto r = cmd_attack(parse_config(j));
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.channel_used, 12);
  EXPECT_EQ(r.row.volume, 12);
}

TEST_F(TrainedLab, RemoteAttackMatchesLocal) {
  const auto cfg = config();
  const auto lab = open_lab(cfg);
  auto session = new_session(lab);
  OracleServer server(*session);
  const int port = server.start();
  const auto remote = cmd_attack(cfg, "http://127.0.0.1:" + std::to_string(port));
  server.stop();
  const auto local = cmd_attack(cfg);
  EXPECT_EQ(remote.row.agreement, local.row.agreement);
  EXPECT_EQ(remote.row.test_acc, local.row.test_acc);
  EXPECT_EQ(remote.row.coverage, local.row.coverage);
  EXPECT_EQ(session->used(), 30);
}

TEST_F(TrainedLab, TableT1HasOneRowPerSource) {
  auto cfg = config();
  fs::remove(cfg.ledger());
  const auto rows = cmd_run_table(cfg, "t1");
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(line_count(cfg.ledger()), 10u);
  EXPECT_EQ(rows.front().run_id, "tiny.t1.proxy_full");
  EXPECT_EQ(rows.back().source, "gaussian noise");
  for (const auto& r : rows) {
    EXPECT_GE(r.coverage, 0.0);
    EXPECT_LE(r.coverage, 1.0);
  }
  EXPECT_THROW(cmd_run_table(cfg, "t9"), ConfigError);
}

TEST_F(TrainedLab, ParallelRowsMatchSerial) {
  auto cfg = config();
  const auto serial = cmd_run_table(cfg, "t2");
  cfg.parallel = 3;
  const auto parallel = cmd_run_table(cfg, "t2");
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].run_id, parallel[i].run_id);
    EXPECT_EQ(serial[i].agreement, parallel[i].agreement);
  }
}

TEST_F(TrainedLab, GeneratorTablesNeedAGan) {
  EXPECT_THROW(cmd_run_table(config(), "t4"), MissingArtifact);
}

TEST_F(TrainedLab, IterativeTableWithDefaultPolicies) {
  auto j = tiny_json(config().out_dir);
  j["gan"] = {{"config", {{"slice_len", 1024}, {"dim_mult", 1}, {"batch_size", 8}}}, {"steps", 2}};
  j["tables"]["t4"] = {{"n_values", {1, 2}}, {"size", 6}};
  const auto cfg = parse_config(j);
  cmd_train_gan(cfg);
  const auto rows = cmd_run_table(cfg, "t4");
  // Two n values times the default two betas and two alphas.
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) EXPECT_LE(r.volume, 12);
  EXPECT_TRUE(fs::exists(cfg.plots() / "t4_coverage_vs_n.png"));
}

TEST(Plot, WritesPngAndRecoverableCsv) {
  TempOut t("wavex_plot");
  const std::vector<plot::Series> series{{"a", {1, 2, 3}, {0.1, 0.5, 0.3}}, {"b", {1, 2, 3}, {0.2, 0.2, 0.9}}};
  plot::line_plot(t.path() / "lines", series, "n", "coverage");
  plot::bar_plot(t.path() / "bars", series);
  for (const char* stem : {"lines", "bars"}) {
    const auto png = slurp(t.path() / (std::string(stem) + ".png"));
    ASSERT_GT(png.size(), 8u);
    EXPECT_EQ(png.substr(1, 3), "PNG");
    EXPECT_EQ(line_count(t.path() / (std::string(stem) + ".csv")), 7u);
  }
  std::ifstream csv(t.path() / "lines.csv");
  std::string header, first;
  std::getline(csv, header);
  std::getline(csv, first);
  EXPECT_EQ(header, "series,n,coverage");
  EXPECT_EQ(first, "a,1,0.1");
}

// ---------------------------------------------------------------------------
// The command-line binary

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WAVEX_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempOut t("wavex_cli_codes");
  fs::create_directories(t.path());
  const auto cfg = t.path() / "tiny.json";
  std::ofstream(cfg) << tiny_json(t.path() / "out").dump();
  const auto broken = t.path() / "broken.json";
  std::ofstream(broken) << "{";
  auto budget = tiny_json(t.path() / "out");
  budget["oracle"]["budget"] = 5;
  const auto capped = t.path() / "capped.json";
  std::ofstream(capped) << budget.dump();

  EXPECT_EQ(run_cli(""), kExitConfig);
  EXPECT_EQ(run_cli("attack"), kExitConfig);
  EXPECT_EQ(run_cli("attack --config " + (t.path() / "absent.json").string()), kExitConfig);
  EXPECT_EQ(run_cli("attack --config " + broken.string()), kExitConfig);
  EXPECT_EQ(run_cli("attack --config " + cfg.string()), kExitConfig);  // no victim yet
  EXPECT_EQ(run_cli("run-table t7 --config " + cfg.string()), kExitConfig);
  EXPECT_EQ(run_cli("train-victim --config " + cfg.string()), kExitOk);
  EXPECT_EQ(run_cli("attack --config " + cfg.string()), kExitOk);
  EXPECT_EQ(run_cli("attack --config " + capped.string()), kExitTruncated);
  EXPECT_EQ(run_cli("attack --config " + cfg.string() + " --seed 9 --out " + (t.path() / "other").string()),
            kExitConfig);  // fresh out dir has no victim
  EXPECT_EQ(run_cli("--help"), kExitOk);
}

}  // namespace
}  // namespace wavex::harness
