// include/wavex/interpret.hpp

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

// Filter visualisation by activation maximisation over growing signal
// lengths, sine-sweep responses, and cross-model filter matching.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/audio.hpp"
#include "wavex/audio_io.hpp"
#include "wavex/knagg_cnn.hpp"
#include "wavex/nn.hpp"

namespace wavex {

struct OctaveSchedule {
  int steps_per_octave = 100;
  int n_octaves = 5;
  double ratio = 1.8;
  double start_scale = 1.0 / (1.8 * 1.8);
  double step_size = 1.0;   // multiplier on the RMS-normalised gradient
  double adam_lr = 0.01;    // Adam learning rate applied to that gradient
  double init_amplitude = 0.1;

  void validate() const {
    if (steps_per_octave < 1 || n_octaves < 1) throw ConfigError("octave schedule: need >=1 step and octave");
    if (!(ratio > 1.0)) throw ConfigError("octave schedule: ratio must exceed 1");
    if (!(start_scale > 0.0)) throw ConfigError("octave schedule: start_scale must be positive");
    if (!(step_size > 0.0) || !(adam_lr > 0.0)) throw ConfigError("octave schedule: step sizes must be positive");
    if (!(init_amplitude > 0.0 && init_amplitude <= 1.0))
      throw ConfigError("octave schedule: init_amplitude must be in (0, 1]");
  }

  // L0 = round(N * start_scale), then each octave multiplies the previous
  // length by `ratio` and rounds. An octave whose nominal scale is 1 uses N
  // itself and the last octave is pinned to round(N * nominal scale), so
  // rounding error never accumulates across the reference length.
  std::vector<std::size_t> lengths(std::size_t input_len) const {
    validate();
    std::vector<std::size_t> out;
    double prev = 0.0;
    for (int o = 0; o < n_octaves; ++o) {
      const double nominal = start_scale * std::pow(ratio, o);
      double len;
      if (o == 0) len = std::round(double(input_len) * start_scale);
      else len = std::round(prev * ratio);
      if (std::abs(nominal - 1.0) < 1e-9) len = double(input_len);
      if (o == n_octaves - 1 && o > 0) len = std::round(double(input_len) * nominal);
      if (len < 1.0) throw ConfigError("octave schedule: octave length rounds to zero");
      if (!out.empty() && std::size_t(len) <= out.back())
        throw ConfigError("octave schedule: lengths must be strictly increasing");
      out.push_back(std::size_t(len));
      prev = len;
    }
    return out;
  }
};

inline void to_json(nlohmann::json& j, const OctaveSchedule& s) {
  j = {{"steps_per_octave", s.steps_per_octave}, {"n_octaves", s.n_octaves}, {"ratio", s.ratio},
       {"start_scale", s.start_scale}, {"step_size", s.step_size}, {"adam_lr", s.adam_lr},
       {"init_amplitude", s.init_amplitude}};
}

inline void from_json(const nlohmann::json& j, OctaveSchedule& s) {
  const OctaveSchedule d;
  s.steps_per_octave = j.value("steps_per_octave", d.steps_per_octave);
  s.n_octaves = j.value("n_octaves", d.n_octaves);
  s.ratio = j.value("ratio", d.ratio);
  s.start_scale = j.value("start_scale", 1.0 / (s.ratio * s.ratio));
  s.step_size = j.value("step_size", d.step_size);
  s.adam_lr = j.value("adam_lr", d.adam_lr);
  s.init_amplitude = j.value("init_amplitude", d.init_amplitude);
  s.validate();
}

// Mean rectified eval-mode activation of one filter, and its input gradient
// when `grad` is non-null.
template <typename T>
double filter_activation(KnaggCNN<T>& model, const std::vector<float>& signal, int layer, int filter,
                         std::vector<double>* grad = nullptr) {
  nn::Tensor<T> x(1, 1, static_cast<int>(signal.size()));
  std::copy(signal.begin(), signal.end(), x.data.begin());
  auto h = model.block_response(x, layer);
  const T* row = h.ptr(0, filter);
  double acc = 0.0;
  for (int t = 0; t < h.l; ++t) acc += std::max<double>(0.0, row[t]);
  const double act = acc / double(h.l);
  if (grad) {
    nn::Tensor<T> d(1, h.c, h.l);
    T* drow = d.ptr(0, filter);
    for (int t = 0; t < h.l; ++t) drow[t] = row[t] > T(0) ? T(1.0 / double(h.l)) : T(0);
    auto dx = model.block_response_backward(d, layer);
    grad->assign(dx.data.begin(), dx.data.end());
  }
  return act;
}

template <typename T>
double filter_activation_infer(const KnaggCNN<T>& model, const Waveform& w, int layer, int filter) {
  nn::Tensor<T> x(1, 1, static_cast<int>(w.size()));
  std::copy(w.samples.begin(), w.samples.end(), x.data.begin());
  auto h = model.block_response_infer(x, layer);
  const T* row = h.ptr(0, filter);
  double acc = 0.0;
  for (int t = 0; t < h.l; ++t) acc += std::max<double>(0.0, row[t]);
  return acc / double(h.l);
}

struct Visualization {
  int layer = 0;
  int filter = 0;
  Waveform wave;
  double initial_activation = 0.0;
  double final_activation = 0.0;
  bool degenerate = false;
  bool reseeded = false;
};

namespace detail {

inline std::vector<float> uniform_signal(std::size_t n, double amp, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<float> s(n);
  for (auto& v : s) v = static_cast<float>(u(rng));
  return s;
}

inline bool all_zero(const std::vector<double>& g) {
  return std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
}

inline void clamp_unit(std::vector<float>& s) {
  for (auto& v : s) v = std::clamp(v, -1.0f, 1.0f);
}

}  // namespace detail

// The starting noise depends on (seed, layer) only. A filter and a permuted
// copy of it therefore start from the same signal and end identically.
template <typename T>
Visualization visualize_filter(const KnaggCNN<T>& model, int layer, int filter, const OctaveSchedule& sched,
                               std::uint64_t seed, int sample_rate = kCanonicalSampleRate) {
  if (layer < 1 || layer > KnaggCNN<T>::kConvBlocks)
    throw PreconditionError("visualize: layer must be in 1.." + std::to_string(KnaggCNN<T>::kConvBlocks));
  if (filter < 0 || filter >= model.block_channels(layer))
    throw PreconditionError("visualize: filter index out of range");
  const auto lengths = sched.lengths(static_cast<std::size_t>(model.config().input_len));
  KnaggCNN<T> net = model;  // block_response caches activations

  Visualization out;
  out.layer = layer;
  out.filter = filter;
  std::vector<double> g;
  auto signal = detail::uniform_signal(lengths[0], sched.init_amplitude,
                                       derive_seed(seed, "visualize.init", std::uint64_t(layer)));
  out.initial_activation = filter_activation(net, signal, layer, filter, &g);
  if (detail::all_zero(g)) {
    out.reseeded = true;
    // Silent at low amplitude: retry once at full scale.
    signal = detail::uniform_signal(lengths[0], 1.0, derive_seed(seed, "visualize.reseed", std::uint64_t(layer)));
    out.initial_activation = filter_activation(net, signal, layer, filter, &g);
    if (detail::all_zero(g)) {
      out.degenerate = true;
      out.final_activation = out.initial_activation;
      out.wave = Waveform(resample_to_length(signal, lengths.back()), sample_rate);
      detail::clamp_unit(out.wave.samples);
      return out;
    }
  }

  for (std::size_t o = 0; o < lengths.size(); ++o) {
    if (o > 0) {
      signal = resample_to_length(signal, lengths[o]);
      detail::clamp_unit(signal);
    }
    nn::Param<double> x("signal", {static_cast<int>(signal.size())});
    nn::Adam<double> opt({sched.adam_lr, 0.9, 0.999, 1e-8});
    // An Adam step can overshoot into a region where the filter is silent;
    // each octave hands its best iterate to the next.
    std::vector<float> best = signal;
    double best_act = -1.0;
    for (int step = 0; step <= sched.steps_per_octave; ++step) {
      const double act = filter_activation(net, signal, layer, filter, &g);
      if (act > best_act) {
        best_act = act;
        best = signal;
      }
      if (step == sched.steps_per_octave) break;
      double ss = 0.0;
      for (double v : g) ss += v * v;
      const double rms = std::sqrt(ss / double(g.size()));
      if (rms == 0.0) break;
      std::copy(signal.begin(), signal.end(), x.value.begin());
      for (std::size_t i = 0; i < g.size(); ++i) x.grad[i] = -sched.step_size * g[i] / rms;
      opt.step({&x});
      for (std::size_t i = 0; i < signal.size(); ++i)
        signal[i] = static_cast<float>(std::clamp(x.value[i], -1.0, 1.0));
    }
    signal = std::move(best);
  }
  out.final_activation = filter_activation(net, signal, layer, filter);
  out.wave = Waveform(std::move(signal), sample_rate);
  return out;
}

// All filters of one layer, spread over `threads` workers (0 = hardware).
template <typename T>
std::vector<Visualization> visualize_layer(const KnaggCNN<T>& model, int layer, const OctaveSchedule& sched,
                                           std::uint64_t seed, unsigned threads = 0,
                                           int sample_rate = kCanonicalSampleRate) {
  const int n = model.block_channels(layer);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<Visualization> out(n);
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < threads; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (int f = static_cast<int>(w); f < n; f += static_cast<int>(threads))
        out[f] = visualize_filter(model, layer, f, sched, seed, sample_rate);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

struct SinePoint {
  double freq_hz = 0.0;
  double activation = 0.0;
};

template <typename T>
std::vector<SinePoint> sine_response(const KnaggCNN<T>& model, int layer, int filter,
                                     std::span<const double> freqs_hz, double amplitude = 1.0,
                                     int sample_rate = kCanonicalSampleRate) {
  if (layer < 1 || layer > KnaggCNN<T>::kConvBlocks || filter < 0 || filter >= model.block_channels(layer))
    throw PreconditionError("sine_response: layer/filter out of range");
  const int sr = sample_rate;
  const auto len = static_cast<std::size_t>(model.config().input_len);
  std::vector<SinePoint> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    if (!(f >= 0.0 && f < sr / 2.0)) throw PreconditionError("sine_response: frequency must be below Nyquist");
    out.push_back({f, filter_activation_infer(model, sine_wave(f, len, sr, amplitude), layer, filter)});
  }
  return out;
}

inline std::vector<double> linear_grid(double lo, double hi, int n) {
  WAVEX_REQUIRE(n >= 1, "grid: need at least one point");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1);
  return g;
}

// ---------------------------------------------------------------------------
// Matching

struct MatchOptions {
  int n_mel = 10;
  double low_freq_cutoff_hz = 100.0;
  double low_energy_fraction = 0.8;
  OctaveSchedule schedule;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_b;  // visualisation seed for model B; defaults to `seed`
  unsigned threads = 0;
  int sample_rate = kCanonicalSampleRate;
};

struct FilterPair {
  int a = 0;
  int b = 0;
  double distance = 0.0;
};

struct FilterMatch {
  int layer = 0;
  std::vector<FilterPair> pairs;
  std::vector<int> excluded_a, excluded_b;
  std::vector<std::vector<double>> distances;  // [A filter][B filter], NaN where excluded

  double mean_distance() const {
    if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (const auto& p : pairs) s += p.distance;
    return s / double(pairs.size());
  }
};

inline double low_frequency_fraction(const Spectrum& s, double cutoff_hz) {
  double low = 0.0, total = 0.0;
  for (std::size_t b = 0; b < s.magnitudes.size(); ++b) {
    const double e = s.magnitudes[b] * s.magnitudes[b];
    total += e;
    if (double(b) * s.bin_hz < cutoff_hz) low += e;
  }
  return total > 0.0 ? low / total : 1.0;
}

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  WAVEX_REQUIRE(a.size() == b.size(), "cosine distance: size mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  return std::clamp(1.0 - ab / std::sqrt(aa * bb), 0.0, 2.0);
}

struct FilterFeatures {
  std::vector<std::vector<double>> mel;  // per filter
  std::vector<bool> excluded;
};

inline FilterFeatures filter_features(const std::vector<Visualization>& vis, const MatchOptions& opt) {
  FilterFeatures out;
  for (const auto& v : vis) {
    const auto spec = magnitude_spectrum(v.wave);
    const auto fb = MelFilterbank::for_spectrum(opt.n_mel, spec);
    out.mel.push_back(mel_project(spec, fb));
    out.excluded.push_back(v.degenerate ||
                           low_frequency_fraction(spec, opt.low_freq_cutoff_hz) > opt.low_energy_fraction);
  }
  return out;
}

inline FilterMatch match_features(const FilterFeatures& fa, const FilterFeatures& fb, int layer) {
  if (fa.mel.size() != fb.mel.size()) throw PreconditionError("match_filters: layer widths differ");
  FilterMatch m;
  m.layer = layer;
  const auto n = fa.mel.size();
  std::vector<int> keep_b;
  for (std::size_t i = 0; i < n; ++i) {
    if (fa.excluded[i]) m.excluded_a.push_back(static_cast<int>(i));
    if (fb.excluded[i]) m.excluded_b.push_back(static_cast<int>(i));
    else keep_b.push_back(static_cast<int>(i));
  }
  if (m.excluded_a.size() == n || keep_b.empty())
    throw PreconditionError("match_filters: every filter was excluded by the low-frequency filter");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.distances.assign(n, std::vector<double>(n, nan));
  for (std::size_t i = 0; i < n; ++i) {
    if (fa.excluded[i]) continue;
    for (int j : keep_b) m.distances[i][j] = cosine_distance(fa.mel[i], fb.mel[j]);
    int best = keep_b.front();
    for (int j : keep_b)
      if (m.distances[i][j] < m.distances[i][best]) best = j;
    m.pairs.push_back({static_cast<int>(i), best, m.distances[i][best]});
  }
  return m;
}

template <typename T>
FilterMatch match_filters(const KnaggCNN<T>& a, const KnaggCNN<T>& b, int layer, const MatchOptions& opt = {}) {
  if (a.block_channels(layer) != b.block_channels(layer))
    throw PreconditionError("match_filters: layer widths differ");
  if (a.config().input_len != b.config().input_len)
    throw PreconditionError("match_filters: models take different input lengths");
  const auto fa = filter_features(visualize_layer(a, layer, opt.schedule, opt.seed, opt.threads, opt.sample_rate), opt);
  const auto fb = filter_features(visualize_layer(b, layer, opt.schedule, opt.seed_b.value_or(opt.seed), opt.threads, opt.sample_rate), opt);
  return match_features(fa, fb, layer);
}

// Reorders the filters of conv block `layer` without changing the function
// the network computes: new filter i is old filter perm[i].
template <typename T>
void permute_filters(KnaggCNN<T>& model, int layer, std::span<const int> perm) {
  const int n = model.block_channels(layer);
  if (static_cast<int>(perm.size()) != n) throw PreconditionError("permute_filters: wrong permutation size");
  std::vector<int> seen(n, 0);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]++) throw PreconditionError("permute_filters: not a permutation");
  }
  auto find = [&](const std::string& name) -> nn::Param<T>* {
    for (auto* p : model.state())
      if (p->name == name) return p;
    return nullptr;
  };
  // Rows: the filter axis is the leading one.
  auto permute_rows = [&](nn::Param<T>* p) {
    if (!p) return;
    const std::size_t row = p->size() / std::size_t(n);
    auto old = p->value;
    for (int i = 0; i < n; ++i)
      std::copy_n(old.begin() + std::size_t(perm[i]) * row, row, p->value.begin() + std::size_t(i) * row);
  };
  const std::string l = std::to_string(layer);
  for (const char* suffix : {".weight", ".bias"}) permute_rows(find("conv" + l + suffix));
  for (const char* suffix : {".gamma", ".beta", ".running_mean", ".running_var"})
    permute_rows(find("bn" + l + suffix));

  // Columns of the consumer: conv{l+1}.weight [out, n, k] or fc1.weight [out, n].
  nn::Param<T>* next = layer < KnaggCNN<T>::kConvBlocks ? find("conv" + std::to_string(layer + 1) + ".weight")
                                                        : find("fc1.weight");
  WAVEX_REQUIRE(next != nullptr, "permute_filters: consumer weights not found");
  const int out = next->shape[0];
  const std::size_t k = next->shape.size() == 3 ? std::size_t(next->shape[2]) : 1;
  auto old = next->value;
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < n; ++i)
      std::copy_n(old.begin() + (std::size_t(o) * n + perm[i]) * k, k,
                  next->value.begin() + (std::size_t(o) * n + i) * k);
}

// ---------------------------------------------------------------------------
// Export

inline void write_visualizations(const std::filesystem::path& dir, const std::vector<Visualization>& vis) {
  std::filesystem::create_directories(dir);
  std::ofstream idx(dir / "visualizations.csv");
  if (!idx) throw IoError("cannot write " + (dir / "visualizations.csv").string());
  idx << "layer,filter,initial_activation,final_activation,degenerate,file\n";
  for (const auto& v : vis) {
    const std::string name = "layer" + std::to_string(v.layer) + "_filter" + std::to_string(v.filter) + ".wav";
    write_wav(dir / name, v.wave);
    idx << v.layer << ',' << v.filter << ',' << v.initial_activation << ',' << v.final_activation << ','
        << (v.degenerate ? 1 : 0) << ',' << name << '\n';
  }
}

inline void write_sine_response_csv(const std::filesystem::path& path, int layer,
                                    const std::vector<std::vector<SinePoint>>& curves) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "layer,filter,freq_hz,activation\n";
  for (std::size_t f = 0; f < curves.size(); ++f)
    for (const auto& p : curves[f]) out << layer << ',' << f << ',' << p.freq_hz << ',' << p.activation << '\n';
}

inline void write_match_csv(const std::filesystem::path& path, const FilterMatch& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "idx_A,idx_B,distance,excluded_flag\n";
  for (const auto& p : m.pairs) out << p.a << ',' << p.b << ',' << p.distance << ",0\n";
  for (int a : m.excluded_a) out << a << ",,,1\n";
}

}  // namespace wavex
