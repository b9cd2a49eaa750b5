// include/wavex/oracle.hpp

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

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/coverage.hpp"
#include "wavex/knagg_cnn.hpp"
#include "wavex/oracle_channel.hpp"

namespace wavex {

struct ResponseRecord {
  std::string query_hash;
  int label = 0;
};

inline std::string hash_waveform(const Waveform& w) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(w.samples.data());
  for (std::size_t i = 0; i < w.samples.size() * sizeof(float); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

template <typename T>
CoverageReport coverage(const KnaggCNN<T>& victim, std::span<const Waveform> queries,
                        std::int64_t unique_victim_train) {
  if (queries.empty()) throw PreconditionError("coverage: empty query set");
  const auto labels = predict_labels(victim, queries);
  return coverage(labels, unique_victim_train);
}

struct OracleOptions {
  LabelMode mode = LabelMode::soft;
  std::optional<std::int64_t> budget;  // nullopt = unlimited
  bool keep_log = true;
  std::string log_path;  // NDJSON; empty = in-memory only
};

// Budget-metered black box around a frozen victim. Thread-safe.
template <typename T>
class OracleSession : public QueryChannel {
 public:
  OracleSession(std::shared_ptr<const KnaggCNN<T>> victim, OracleOptions opt)
      : victim_(std::move(victim)), opt_(std::move(opt)) {
    WAVEX_REQUIRE(victim_ != nullptr, "oracle: victim model required");
    if (opt_.budget && *opt_.budget < 0) throw ConfigError("oracle: negative budget");
    if (!opt_.log_path.empty()) {
      log_file_.open(opt_.log_path, std::ios::app);
      if (!log_file_) throw IoError("oracle: cannot open response log " + opt_.log_path);
    }
  }

  ChannelInfo info() const override {
    return {victim_->n_classes(), static_cast<std::size_t>(victim_->config().input_len),
            sample_rate_, opt_.mode};
  }
  std::int64_t used() const override { return used_.load(); }
  std::optional<std::int64_t> limit() const override { return opt_.budget; }

  Labels query(std::span<const Waveform> batch) override {
    validate(batch);
    reserve(static_cast<std::int64_t>(batch.size()));
    Labels out;
    if (batch.empty()) return out;
    auto probs = predict_proba(*victim_, batch);
    out.ids.reserve(probs.size());
    for (const auto& p : probs) out.ids.push_back(nn::argmax(p));
    if (opt_.mode == LabelMode::soft) out.probabilities = std::move(probs);
    if (opt_.keep_log) record(batch, out.ids);
    return out;
  }

  std::vector<ResponseRecord> log() const {
    std::lock_guard lock(log_mu_);
    return log_;
  }

  // Coverage over everything answered so far (harness side).
  CoverageReport coverage_from_log(std::int64_t unique_victim_train) const {
    std::vector<int> labels;
    for (const auto& r : log()) labels.push_back(r.label);
    return coverage(labels, unique_victim_train);
  }

  void set_sample_rate(int rate) { sample_rate_ = rate; }

 private:
  void validate(std::span<const Waveform> batch) const {
    const auto len = static_cast<std::size_t>(victim_->config().input_len);
    for (const auto& w : batch) {
      if (w.size() != len)
        throw PreconditionError("oracle: expected " + std::to_string(len) + " samples, got " +
                                std::to_string(w.size()));
      if (w.sample_rate != sample_rate_) throw PreconditionError("oracle: sample rate mismatch");
      for (float v : w.samples)
        if (!std::isfinite(v)) throw PreconditionError("oracle: non-finite sample");
    }
  }

  void reserve(std::int64_t n) {
    if (!opt_.budget) {
      used_.fetch_add(n);
      return;
    }
    std::int64_t cur = used_.load();
    do {
      if (cur + n > *opt_.budget) throw BudgetExhausted(*opt_.budget - cur, n);
    } while (!used_.compare_exchange_weak(cur, cur + n));
  }

  void record(std::span<const Waveform> batch, const std::vector<int>& ids) {
    std::lock_guard lock(log_mu_);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ResponseRecord r{hash_waveform(batch[i]), ids[i]};
      if (log_file_.is_open())
        log_file_ << nlohmann::json{{"query_hash", r.query_hash}, {"label", r.label}}.dump() << '\n';
      log_.push_back(std::move(r));
    }
    if (log_file_.is_open()) log_file_.flush();
  }

  std::shared_ptr<const KnaggCNN<T>> victim_;
  OracleOptions opt_;
  int sample_rate_ = kCanonicalSampleRate;
  std::atomic<std::int64_t> used_{0};
  mutable std::mutex log_mu_;
  std::vector<ResponseRecord> log_;
  std::ofstream log_file_;
};

}  // namespace wavex
