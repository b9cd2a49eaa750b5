// include/wavex/checkpoint.hpp

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

// Single-file model archive:
//   8 bytes  "WVXCKPT1"
//   u32      header length (little endian)
//   header   JSON {kind, config, seed, step, extra, tensors:[{name, shape, offset, count}]}
//   payload  float32 values, tensors back to back

#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/knagg_cnn.hpp"
#include "wavex/nn.hpp"
#include "wavex/wavegan.hpp"

namespace wavex {

inline constexpr char kCheckpointMagic[8] = {'W', 'V', 'X', 'C', 'K', 'P', 'T', '1'};

struct CheckpointTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string kind;  // "knagg_cnn" | "wavegan"
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  nlohmann::json extra = nlohmann::json::object();
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor& tensor(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    throw IoError("checkpoint: missing tensor " + name);
  }
};

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  nlohmann::json header = {{"kind", ck.kind},
                           {"config", ck.config},
                           {"seed", ck.seed},
                           {"step", ck.step},
                           {"extra", ck.extra}};
  std::size_t offset = 0;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& t : ck.tensors) {
    list.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
    offset += t.values.size();
  }
  header["tensors"] = list;
  const std::string text = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot write " + path.string());
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    const auto len = static_cast<std::uint32_t>(text.size());
    unsigned char lb[4] = {static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
                           static_cast<unsigned char>(len >> 16), static_cast<unsigned char>(len >> 24)};
    out.write(reinterpret_cast<const char*>(lb), 4);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : ck.tensors)
      out.write(reinterpret_cast<const char*>(t.values.data()),
                static_cast<std::streamsize>(t.values.size() * sizeof(float)));
    if (!out) throw IoError("checkpoint: short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  char magic[8];
  unsigned char lb[4];
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(lb), 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw IoError("checkpoint: bad magic in " + path.string());
  const std::uint32_t len = lb[0] | (lb[1] << 8) | (lb[2] << 16) | (std::uint32_t(lb[3]) << 24);
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw IoError("checkpoint: truncated header in " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad header: ") + e.what());
  }
  Checkpoint ck;
  ck.kind = header.at("kind").get<std::string>();
  ck.config = header.at("config");
  ck.seed = header.at("seed").get<std::uint64_t>();
  ck.step = header.at("step").get<std::int64_t>();
  ck.extra = header.value("extra", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    CheckpointTensor ct;
    ct.name = t.at("name").get<std::string>();
    ct.shape = t.at("shape").get<std::vector<int>>();
    ct.values.resize(t.at("count").get<std::size_t>());
    in.read(reinterpret_cast<char*>(ct.values.data()),
            static_cast<std::streamsize>(ct.values.size() * sizeof(float)));
    if (!in) throw IoError("checkpoint: truncated payload in " + path.string());
    ck.tensors.push_back(std::move(ct));
  }
  return ck;
}

template <typename Params>
std::vector<CheckpointTensor> export_params(const Params& params) {
  std::vector<CheckpointTensor> out;
  for (const auto* p : params) {
    CheckpointTensor t{p->name, p->shape, {}};
    t.values.assign(p->value.begin(), p->value.end());
    out.push_back(std::move(t));
  }
  return out;
}

template <typename Params>
void import_params(const Checkpoint& ck, const Params& params) {
  for (auto* p : params) {
    const auto& t = ck.tensor(p->name);
    if (t.shape != p->shape) throw IoError("checkpoint: shape mismatch for " + p->name);
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = t.values[i];
  }
}

inline Checkpoint checkpoint_of(const KnaggCNN<float>& m, std::uint64_t seed, std::int64_t step = 0) {
  Checkpoint ck;
  ck.kind = "knagg_cnn";
  ck.config = m.config();
  ck.seed = seed;
  ck.step = step;
  ck.tensors = export_params(m.state());
  return ck;
}

inline KnaggCNN<float> load_classifier(const std::filesystem::path& path) {
  const auto ck = read_checkpoint(path);
  if (ck.kind != "knagg_cnn") throw IoError("checkpoint: " + path.string() + " is not a classifier");
  KnaggCNN<float> m(ck.config.get<KnaggCNNConfig>(), ck.seed);
  import_params(ck, m.state());
  return m;
}

inline void save_classifier(const std::filesystem::path& path, const KnaggCNN<float>& m,
                            std::uint64_t seed, const nlohmann::json& extra = nlohmann::json::object()) {
  auto ck = checkpoint_of(m, seed);
  ck.extra = extra;
  write_checkpoint(path, ck);
}

inline void save_wavegan(const std::filesystem::path& path, Generator<float>& g, Discriminator<float>& d,
                         std::uint64_t seed, std::int64_t step) {
  Checkpoint ck;
  ck.kind = "wavegan";
  ck.config = g.config();
  ck.seed = seed;
  ck.step = step;
  ck.tensors = export_params(g.params());
  auto dt = export_params(d.params());
  ck.tensors.insert(ck.tensors.end(), dt.begin(), dt.end());
  write_checkpoint(path, ck);
}

struct LoadedGan {
  Generator<float> gen;
  Discriminator<float> disc;
  std::int64_t step = 0;
};

inline LoadedGan load_wavegan(const std::filesystem::path& path) {
  const auto ck = read_checkpoint(path);
  if (ck.kind != "wavegan") throw IoError("checkpoint: " + path.string() + " is not a wavegan");
  const auto cfg = ck.config.get<WaveGANConfig>();
  LoadedGan g{Generator<float>(cfg, ck.seed), Discriminator<float>(cfg, ck.seed), ck.step};
  import_params(ck, g.gen.params());
  import_params(ck, g.disc.params());
  return g;
}

}  // namespace wavex
