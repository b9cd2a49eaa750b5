// include/wavex/common.hpp

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
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wavex {

// Error hierarchy. Every failure a caller may want to react to has its own
// type; messages are meant for humans.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted(std::int64_t remaining, std::int64_t requested)
      : Error("query budget exhausted: requested " + std::to_string(requested) +
              ", remaining " + std::to_string(remaining)),
        remaining_(remaining) {}
  std::int64_t remaining() const { return remaining_; }

 private:
  std::int64_t remaining_;
};

#define WAVEX_REQUIRE(cond, msg)                                          \
  do {                                                                    \
    if (!(cond)) throw ::wavex::PreconditionError(std::string(msg));      \
  } while (0)

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for one RNG consumer, derived from the experiment's global seed and a
// stable component name. Two components never share a stream.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed,
                                    std::string_view component) {
  return mix64(global_seed ^ mix64(fnv1a(component)));
}

constexpr std::uint64_t derive_seed(std::uint64_t global_seed,
                                    std::string_view component,
                                    std::uint64_t index) {
  return mix64(derive_seed(global_seed, component) + mix64(index + 1));
}

}  // namespace wavex
