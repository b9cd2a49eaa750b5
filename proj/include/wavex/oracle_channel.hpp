// include/wavex/oracle_channel.hpp

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

// The only thing attacker code gets to see of a victim: a metered query
// interface. Implemented in-process by OracleSession and over HTTP by
// RemoteOracle.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavex/audio.hpp"
#include "wavex/common.hpp"

namespace wavex {

enum class LabelMode { soft, hard };

inline const char* to_string(LabelMode m) { return m == LabelMode::soft ? "soft" : "hard"; }

inline LabelMode label_mode_from_string(const std::string& s) {
  if (s == "soft") return LabelMode::soft;
  if (s == "hard") return LabelMode::hard;
  throw ConfigError("unknown label mode: " + s);
}

// Responses for one batch. `ids` is always filled; `probabilities` only in
// soft mode.
struct Labels {
  std::vector<int> ids;
  std::vector<std::vector<float>> probabilities;

  std::size_t size() const { return ids.size(); }
};

// Public facts about the endpoint (what a documented API would state).
struct ChannelInfo {
  int n_classes = 0;
  std::size_t input_len = 0;
  int sample_rate = kCanonicalSampleRate;
  LabelMode mode = LabelMode::soft;
};

class QueryChannel {
 public:
  virtual ~QueryChannel() = default;

  virtual ChannelInfo info() const = 0;
  virtual std::int64_t used() const = 0;
  // nullopt means unlimited.
  virtual std::optional<std::int64_t> limit() const = 0;

  // Throws BudgetExhausted when the batch does not fit in the remaining
  // budget, PreconditionError for malformed waveforms. Neither consumes budget.
  virtual Labels query(std::span<const Waveform> batch) = 0;

  std::optional<std::int64_t> remaining() const {
    auto l = limit();
    if (!l) return std::nullopt;
    return *l - used();
  }
};

}  // namespace wavex
