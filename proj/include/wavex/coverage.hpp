// include/wavex/coverage.hpp

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

#include <cstdint>
#include <set>
#include <span>

#include "wavex/common.hpp"

namespace wavex {

struct CoverageReport {
  std::int64_t unique_predicted = 0;
  std::int64_t unique_victim_train = 0;
  double ratio = 0.0;
  std::int64_t volume = 0;
};

// Coverage of a query set given the victim's hard labels on it.
inline CoverageReport coverage(std::span<const int> victim_labels, std::int64_t unique_victim_train) {
  if (victim_labels.empty()) throw PreconditionError("coverage: empty query set");
  WAVEX_REQUIRE(unique_victim_train >= 1, "coverage: victim label count must be >= 1");
  std::set<int> seen(victim_labels.begin(), victim_labels.end());
  CoverageReport r;
  r.unique_predicted = static_cast<std::int64_t>(seen.size());
  r.unique_victim_train = unique_victim_train;
  r.ratio = double(r.unique_predicted) / double(unique_victim_train);
  r.volume = static_cast<std::int64_t>(victim_labels.size());
  return r;
}

}  // namespace wavex
