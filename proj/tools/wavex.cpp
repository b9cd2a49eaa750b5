// tools/wavex.cpp

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

// Command-line front end for the experiment harness.
//
//   wavex train-victim  --config C [--reverse]
//   wavex train-gan     --config C
//   wavex serve-oracle  --config C
//   wavex attack        --config C [--remote http://host:port]
//   wavex run-table     {t1,t2,t3,t4,reverse,e3} --config C
//   wavex visualize     --config C
//   wavex match-filters --config C
//
// Every verb accepts --seed and --out to override the config. Exit codes:
// 0 success, 2 configuration error, 3 attack truncated by the query budget.

#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wavex/harness.hpp"

namespace {

using namespace wavex;
using namespace wavex::harness;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> parallel;
};

void add_common(CLI::App* verb, Common& c) {
  verb->add_option("--config", c.config, "experiment JSON")->required()->check(CLI::ExistingFile);
  verb->add_option("--seed", c.seed, "override the global seed");
  verb->add_option("--out", c.out, "override the output directory");
  verb->add_option("--parallel", c.parallel, "ledger rows run concurrently")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& c) {
  auto cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.parallel) cfg.parallel = *c.parallel;
  return cfg;
}

void print_row(const LedgerRow& r) {
  std::cout << std::left << std::setw(44) << r.run_id << std::setw(34) << r.source << std::right << std::setw(7)
            << r.volume << std::fixed << std::setprecision(3) << std::setw(8) << r.coverage << std::setw(8)
            << r.test_acc << std::setw(8) << r.agreement << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavex: model extraction testbed for raw-waveform speaker classifiers"};
  app.require_subcommand(1);
  Common common;

  bool reverse = false;
  auto* train_victim = app.add_subcommand("train-victim", "train the victim classifier");
  add_common(train_victim, common);
  train_victim->add_flag("--reverse", reverse, "swap victim and proxy corpora");

  auto* train_gan = app.add_subcommand("train-gan", "train the attacker's WaveGAN");
  add_common(train_gan, common);

  auto* serve = app.add_subcommand("serve-oracle", "serve the victim over HTTP");
  add_common(serve, common);

  std::optional<std::string> remote;
  auto* attack = app.add_subcommand("attack", "run one extraction");
  add_common(attack, common);
  attack->add_option("--remote", remote, "oracle URL, e.g. http://127.0.0.1:8765");

  std::string table;
  auto* run_table = app.add_subcommand("run-table", "run one experiment table");
  add_common(run_table, common);
  run_table->add_option("table", table, "t1, t2, t3, t4, reverse or e3")
      ->required()
      ->check(CLI::IsMember({"t1", "t2", "t3", "t4", "reverse", "e3"}));

  auto* visualize = app.add_subcommand("visualize", "filter visualisations and sine responses");
  add_common(visualize, common);

  auto* match = app.add_subcommand("match-filters", "match filters against interpret.other_checkpoint");
  add_common(match, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto cfg = resolve(common);
    if (*train_victim) {
      const auto r = cmd_train_victim(cfg, reverse);
      std::cout << "victim test accuracy " << std::fixed << std::setprecision(4) << r.test_accuracy << " after "
                << r.epochs << " epochs\n";
    } else if (*train_gan) {
      const auto r = cmd_train_gan(cfg);
      std::cout << "wrote " << (cfg.out_dir / r.checkpoint).string() << " after " << r.steps << " steps\n";
    } else if (*serve) {
      cmd_serve_oracle(cfg);
    } else if (*attack) {
      const auto r = cmd_attack(cfg, remote);
      print_row(r.row);
      if (r.truncated) {
        std::cerr << "attack truncated by the query budget after " << r.channel_used << " queries\n";
        return kExitTruncated;
      }
    } else if (*run_table) {
      for (const auto& r : cmd_run_table(cfg, table)) print_row(r);
      std::cout << "ledger: " << cfg.ledger().string() << '\n';
    } else if (*visualize) {
      cmd_visualize(cfg);
      std::cout << "wrote " << cfg.path("visualize").string() << '\n';
    } else if (*match) {
      for (const auto& m : cmd_match_filters(cfg))
        std::cout << "layer " << m.layer << ": " << m.pairs.size() << " pairs, mean distance " << m.mean_distance()
                  << '\n';
    }
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
