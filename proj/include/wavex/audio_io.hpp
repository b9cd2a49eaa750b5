// include/wavex/audio_io.hpp

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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/audio.hpp"

namespace wavex {

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16le(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}
inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

// RIFF/WAVE, 16-bit PCM or 32-bit float. Multi-channel input is averaged to
// mono. Truncated or malformed files throw IoError.
inline Waveform decode_wav(const std::vector<unsigned char>& bytes) {
  using detail::read_u16le;
  using detail::read_u32le;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw IoError("not a RIFF/WAVE stream");
  std::size_t pos = 12;
  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t size = read_u32le(hdr + 4);
    std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw IoError("truncated fmt chunk");
      format = read_u16le(bytes.data() + body);
      channels = read_u16le(bytes.data() + body + 2);
      rate = read_u32le(bytes.data() + body + 4);
      bits = read_u16le(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = read_u16le(bytes.data() + body + 24);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw IoError("data chunk before fmt chunk");
      if (body + size > bytes.size()) throw IoError("truncated data chunk");
      if (channels < 1 || rate == 0) throw IoError("bad channel count or sample rate");
      const bool pcm16 = format == 1 && bits == 16;
      const bool f32 = format == 3 && bits == 32;
      if (!pcm16 && !f32) throw IoError("unsupported WAV encoding");
      const std::size_t frame = std::size_t(channels) * (bits / 8);
      const std::size_t frames = size / frame;
      if (frames == 0) throw IoError("empty data chunk");
      std::vector<float> out(frames);
      const unsigned char* d = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const unsigned char* s = d + i * frame + std::size_t(c) * (bits / 8);
          if (pcm16) {
            acc += std::max(-1.0, double(static_cast<std::int16_t>(read_u16le(s))) / 32767.0);
          } else {
            float v;
            std::uint32_t u = read_u32le(s);
            std::memcpy(&v, &u, 4);
            acc += v;
          }
        }
        out[i] = static_cast<float>(acc / channels);
      }
      return Waveform(std::move(out), static_cast<int>(rate));
    }
    pos = body + size + (size & 1u);
  }
  throw IoError("no data chunk");
}

inline Waveform read_wav(const std::filesystem::path& path) {
  return decode_wav(detail::slurp(path));
}

// 16-bit signed little-endian mono PCM.
inline std::string encode_wav(const Waveform& w) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(w.size() * 2);
  out.append("RIFF");
  detail::put_u32le(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);
  detail::put_u16le(out, 1);
  detail::put_u32le(out, static_cast<std::uint32_t>(w.sample_rate));
  detail::put_u32le(out, static_cast<std::uint32_t>(w.sample_rate * 2));
  detail::put_u16le(out, 2);
  detail::put_u16le(out, 16);
  out.append("data");
  detail::put_u32le(out, data_bytes);
  for (float v : w.samples) {
    double s = std::clamp(double(v), -1.0, 1.0) * 32767.0;
    detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(s))));
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  auto bytes = encode_wav(w);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Raw float32 little-endian samples plus a JSON sidecar `<path>.json`
// holding {"sample_rate": R, "samples": N}.
inline void write_raw_f32(const std::filesystem::path& path, const Waveform& w) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(w.samples.data()),
              static_cast<std::streamsize>(w.size() * sizeof(float)));
  }
  std::ofstream side(path.string() + ".json");
  side << nlohmann::json{{"sample_rate", w.sample_rate}, {"samples", w.size()}}.dump() << "\n";
}

inline Waveform read_raw_f32(const std::filesystem::path& path) {
  auto bytes = detail::slurp(path);
  std::ifstream side(path.string() + ".json");
  if (!side) throw IoError("missing sidecar for " + path.string());
  nlohmann::json meta;
  try {
    side >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad sidecar: ") + e.what());
  }
  const std::size_t n = meta.value("samples", bytes.size() / 4);
  if (bytes.size() < n * 4) throw IoError("raw float32 file shorter than sidecar claims");
  std::vector<float> s(n);
  std::memcpy(s.data(), bytes.data(), n * 4);
  return Waveform(std::move(s), meta.at("sample_rate").get<int>());
}

}  // namespace wavex
