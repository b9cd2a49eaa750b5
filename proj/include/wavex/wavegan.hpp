// include/wavex/wavegan.hpp

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

// DCGAN-style waveform generator and critic trained with WGAN-GP.
//
// Generator: latent -> dense -> [C0, L0] -> ReLU -> repeated stride-4
// transposed convolutions (kernel 25) -> tanh.
// Critic: stride-4 convolutions with LeakyReLU(0.2) and phase shuffle ->
// dense -> scalar score.
//
// The gradient-penalty term needs d/dtheta of ||grad_x D||. With v_i fixed
// to the chain-rule weight of each input gradient, that equals
// d/dtheta sum_i <grad_x D(x_i), v_i>. For fixed activation masks the inner
// product is a bias-free copy of the critic applied to v (the tangent
// network), so its parameter gradient is ordinary backprop through it.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/audio.hpp"
#include "wavex/corpus.hpp"
#include "wavex/nn.hpp"

namespace wavex {

struct WaveGANConfig {
  int latent_dim = 10;
  int kernel_len = 25;
  int dim_mult = 16;
  int phase_shuffle_radius = 2;
  int disc_updates_per_gen = 5;
  int batch_size = 64;
  int slice_len = kCanonicalInputLen;
  int sample_rate = kCanonicalSampleRate;
  double gp_lambda = 10.0;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;

  // Number of x4 upsampling stages: the smallest L with slice_len / 4^L <= 16.
  int n_stages() const {
    int l = 0, len = slice_len;
    while (len > 16) {
      len /= 4;
      ++l;
    }
    return l;
  }
  int start_len() const { return slice_len >> (2 * n_stages()); }
  int start_channels() const { return dim_mult << (n_stages() - 1); }

  void validate() const {
    if (dim_mult < 1) throw ConfigError("wavegan: dim_mult must be >= 1");
    if (latent_dim < 1 || kernel_len < 4 || batch_size < 1)
      throw ConfigError("wavegan: bad latent/kernel/batch size");
    if (disc_updates_per_gen < 1) throw ConfigError("wavegan: need >= 1 critic update");
    if (phase_shuffle_radius < 0) throw ConfigError("wavegan: negative phase shuffle radius");
    if (slice_len < 64) throw ConfigError("wavegan: slice_len must be >= 64");
    const int l = n_stages();
    if ((start_len() << (2 * l)) != slice_len)
      throw ConfigError("wavegan: slice_len must be a multiple of 4^stages");
  }

  bool operator==(const WaveGANConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const WaveGANConfig& c) {
  j = {{"latent_dim", c.latent_dim},
       {"kernel_len", c.kernel_len},
       {"dim_mult", c.dim_mult},
       {"phase_shuffle_radius", c.phase_shuffle_radius},
       {"disc_updates_per_gen", c.disc_updates_per_gen},
       {"batch_size", c.batch_size},
       {"slice_len", c.slice_len},
       {"sample_rate", c.sample_rate},
       {"gp_lambda", c.gp_lambda},
       {"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2}};
}

inline void from_json(const nlohmann::json& j, WaveGANConfig& c) {
  WaveGANConfig d;
  c.latent_dim = j.value("latent_dim", d.latent_dim);
  c.kernel_len = j.value("kernel_len", d.kernel_len);
  c.dim_mult = j.value("dim_mult", d.dim_mult);
  c.phase_shuffle_radius = j.value("phase_shuffle_radius", d.phase_shuffle_radius);
  c.disc_updates_per_gen = j.value("disc_updates_per_gen", d.disc_updates_per_gen);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.slice_len = j.value("slice_len", d.slice_len);
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.gp_lambda = j.value("gp_lambda", d.gp_lambda);
  c.lr = j.value("lr", d.lr);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
}

template <typename T>
class Generator {
 public:
  Generator() = default;
  Generator(const WaveGANConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(seed, "wavegan.generator"));
    const int c0 = cfg_.start_channels();
    // Glorot weights and zero biases. With fan-in uniform biases the constant
    // terms dominate after a few upsampling stages and every latent maps to
    // nearly the same waveform.
    dense_ = nn::Linear<T>("g.dense", cfg_.latent_dim, c0 * cfg_.start_len());
    nn::init_glorot(dense_.weight, cfg_.latent_dim, c0 * cfg_.start_len(), rng);
    const int stages = cfg_.n_stages();
    const int pad = (cfg_.kernel_len - 4 + 1) / 2;
    int in = c0;
    for (int s = 0; s < stages; ++s) {
      const int out = s + 1 == stages ? 1 : in / 2;
      up_.emplace_back("g.up" + std::to_string(s + 1), in, out, cfg_.kernel_len, 4, pad);
      nn::init_glorot(up_.back().weight, in * cfg_.kernel_len, out * cfg_.kernel_len, rng);
      in = out;
    }
    relu_.assign(stages, nn::LeakyReLU<T>(0.0));
  }

  const WaveGANConfig& config() const { return cfg_; }

  nn::Tensor<T> forward(const nn::Tensor<T>& z) {
    nn::Tensor<T> h = dense_.forward(z);
    h = reshape(h);
    h = relu0_.forward(h);
    for (std::size_t s = 0; s < up_.size(); ++s) {
      h = up_[s].forward(h);
      if (s + 1 < up_.size()) h = relu_[s].forward(h);
    }
    return tanh_.forward(h);
  }

  nn::Tensor<T> infer(const nn::Tensor<T>& z) const {
    nn::Tensor<T> h = reshape(dense_.infer(z));
    h = relu0_.infer(h);
    for (std::size_t s = 0; s < up_.size(); ++s) {
      h = up_[s].infer(h);
      if (s + 1 < up_.size()) h = relu_[s].infer(h);
    }
    return tanh_.infer(h);
  }

  void backward(const nn::Tensor<T>& dy) {
    nn::Tensor<T> g = tanh_.backward(dy);
    for (std::size_t s = up_.size(); s-- > 0;) {
      if (s + 1 < up_.size()) g = relu_[s].backward(g);
      g = up_[s].backward(g);
    }
    g = relu0_.backward(g);
    nn::Tensor<T> flat(g.n, g.c * g.l, 1);
    flat.data = std::move(g.data);
    dense_.backward(flat);
  }

  std::vector<nn::Param<T>*> params() {
    auto p = dense_.params();
    for (auto& u : up_) {
      auto q = u.params();
      p.insert(p.end(), q.begin(), q.end());
    }
    return p;
  }
  void zero_grad() { nn::zero_grad(params()); }

 private:
  nn::Tensor<T> reshape(nn::Tensor<T> h) const {
    nn::Tensor<T> r(h.n, cfg_.start_channels(), cfg_.start_len());
    r.data = std::move(h.data);
    return r;
  }

  WaveGANConfig cfg_;
  nn::Linear<T> dense_;
  nn::LeakyReLU<T> relu0_{0.0};
  std::vector<nn::ConvTranspose1d<T>> up_;
  std::vector<nn::LeakyReLU<T>> relu_;
  nn::Tanh<T> tanh_;
};

template <typename T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const WaveGANConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(seed, "wavegan.discriminator"));
    const int stages = cfg_.n_stages();
    const int pad_total = cfg_.kernel_len - 4;
    int in = 1, out = cfg_.dim_mult;
    for (int s = 0; s < stages; ++s) {
      conv_.emplace_back("d.conv" + std::to_string(s + 1), in, out, cfg_.kernel_len, 4,
                         (pad_total + 1) / 2, pad_total / 2);
      conv_.back().init(rng);
      in = out;
      out *= 2;
    }
    act_.assign(stages, nn::LeakyReLU<T>(0.2));
    shuffle_.assign(stages > 0 ? stages - 1 : 0, nn::PhaseShuffle<T>(cfg_.phase_shuffle_radius));
    dense_ = nn::Linear<T>("d.dense", in * cfg_.start_len(), 1);
    dense_.init(rng);
  }

  const WaveGANConfig& config() const { return cfg_; }

  // One critic score per example.
  std::vector<T> forward(const nn::Tensor<T>& x, const nn::Mode& mode) {
    if (x.c != 1 || x.l != cfg_.slice_len) throw ShapeError("critic: input length mismatch");
    nn::Tensor<T> h = x;
    pre_.resize(conv_.size());
    for (std::size_t s = 0; s < conv_.size(); ++s) {
      pre_[s] = conv_[s].forward(h);
      h = act_[s].forward(pre_[s]);
      if (s < shuffle_.size()) h = shuffle_[s].forward(h, mode);
    }
    last_c_ = h.c;
    last_l_ = h.l;
    nn::Tensor<T> flat(h.n, h.c * h.l, 1);
    flat.data = std::move(h.data);
    auto y = dense_.forward(flat);
    return y.data;
  }

  // Returns d(sum_i w_i D(x_i))/dx and accumulates the parameter gradient.
  nn::Tensor<T> backward(const std::vector<T>& weights) {
    nn::Tensor<T> g(static_cast<int>(weights.size()), 1, 1);
    g.data = weights;
    g = dense_.backward(g);
    nn::Tensor<T> h(g.n, last_c_, last_l_);
    h.data = std::move(g.data);
    for (std::size_t s = conv_.size(); s-- > 0;) {
      if (s < shuffle_.size()) h = shuffle_[s].backward(h);
      h = conv_[s].backward(act_[s].backward(h));
    }
    return h;
  }

  // Accumulates d/dtheta sum_i <grad_x D(x_i), v_i> at the inputs of the
  // last forward() call. Returns the inner products.
  std::vector<T> tangent_backward(const nn::Tensor<T>& v) {
    WAVEX_REQUIRE(pre_.size() == conv_.size() && !pre_.empty() && pre_[0].n == v.n,
                  "critic: tangent pass needs a matching forward pass");
    const auto slope = [&](std::size_t s, nn::Tensor<T>& u) {
      const T leak = T(act_[s].slope);
      for (std::size_t k = 0; k < u.data.size(); ++k)
        if (pre_[s].data[k] < T(0)) u.data[k] *= leak;
    };
    const auto unbias = [](nn::Tensor<T>& y, const nn::Param<T>& b) {
      for (int i = 0; i < y.n; ++i)
        for (int c = 0; c < y.c; ++c) {
          T* p = y.ptr(i, c);
          for (int t = 0; t < y.l; ++t) p[t] -= b.value[c];
        }
    };
    const auto drop_bias_grad = [](const nn::Tensor<T>& g, nn::Param<T>& b) {
      for (int i = 0; i < g.n; ++i)
        for (int c = 0; c < g.c; ++c) {
          const T* p = g.ptr(i, c);
          for (int t = 0; t < g.l; ++t) b.grad[c] -= p[t];
        }
    };

    nn::Tensor<T> u = v;
    for (std::size_t s = 0; s < conv_.size(); ++s) {
      u = conv_[s].forward(u);
      unbias(u, conv_[s].bias);
      slope(s, u);
      if (s < shuffle_.size()) u = nn::PhaseShuffle<T>::shift(u, shuffle_[s].last_shifts());
    }
    nn::Tensor<T> flat(u.n, u.c * u.l, 1);
    flat.data = std::move(u.data);
    auto j = dense_.forward(flat);
    unbias(j, dense_.bias);

    nn::Tensor<T> g(v.n, 1, 1, T(1));
    auto gh = dense_.backward(g);
    drop_bias_grad(g, dense_.bias);
    nn::Tensor<T> h(v.n, last_c_, last_l_);
    h.data = std::move(gh.data);
    for (std::size_t s = conv_.size(); s-- > 0;) {
      if (s < shuffle_.size()) h = shuffle_[s].backward(h);
      slope(s, h);
      auto next = conv_[s].backward(h);
      drop_bias_grad(h, conv_[s].bias);
      h = std::move(next);
    }
    return j.data;
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> p;
    for (auto& c : conv_) {
      auto q = c.params();
      p.insert(p.end(), q.begin(), q.end());
    }
    auto q = dense_.params();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }
  void zero_grad() { nn::zero_grad(params()); }

 private:
  WaveGANConfig cfg_;
  std::vector<nn::Conv1d<T>> conv_;
  std::vector<nn::LeakyReLU<T>> act_;
  std::vector<nn::PhaseShuffle<T>> shuffle_;
  nn::Linear<T> dense_;
  std::vector<nn::Tensor<T>> pre_;
  int last_c_ = 0, last_l_ = 0;
};

template <typename T>
nn::Tensor<T> to_tensor_batch(const std::vector<Waveform>& batch) {
  nn::Tensor<T> x(static_cast<int>(batch.size()), 1, static_cast<int>(batch.front().size()));
  for (std::size_t i = 0; i < batch.size(); ++i)
    std::copy(batch[i].samples.begin(), batch[i].samples.end(), x.ptr(static_cast<int>(i)));
  return x;
}

template <typename T>
nn::Tensor<T> sample_latents(int count, int dim, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::Tensor<T> z(count, dim, 1);
  for (auto& v : z.data) v = T(u(rng));
  return z;
}

struct CriticLoss {
  double wasserstein = 0.0;  // mean D(fake) - mean D(real)
  double penalty = 0.0;      // lambda * mean (||grad|| - 1)^2
  double total() const { return wasserstein + penalty; }
};

// Critic loss for one batch; accumulates its parameter gradient into `disc`
// (which the caller zeroes). `interp` holds the per-example mixing weights
// of real and fake for the penalty term.
template <typename T>
CriticLoss critic_loss_and_grad(Discriminator<T>& disc, const nn::Tensor<T>& real,
                                const nn::Tensor<T>& fake, const std::vector<double>& interp,
                                Rng& rng, double lambda) {
  const int n = real.n;
  auto params = disc.params();
  CriticLoss loss;

  nn::Tensor<T> mixed(n, 1, real.l);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < real.l; ++t)
      mixed.at(i, 0, t) = T(interp[i] * real.at(i, 0, t) + (1 - interp[i]) * fake.at(i, 0, t));

  // Penalty: input gradients at the interpolates (parameter grads discarded).
  auto saved = nn::flat_grads(params);
  nn::Mode mode{true, &rng, false};
  disc.forward(mixed, mode);
  nn::Tensor<T> gx = disc.backward(std::vector<T>(n, T(1)));
  nn::zero_grad(params);
  nn::Tensor<T> v(n, 1, real.l);
  for (int i = 0; i < n; ++i) {
    double norm2 = 0;
    for (int t = 0; t < real.l; ++t) norm2 += double(gx.at(i, 0, t)) * gx.at(i, 0, t);
    const double norm = std::sqrt(norm2);
    loss.penalty += lambda * (norm - 1) * (norm - 1) / n;
    const double coef = norm > 0 ? 2.0 * lambda * (norm - 1) / (norm * n) : 0.0;
    for (int t = 0; t < real.l; ++t) v.at(i, 0, t) = T(coef * gx.at(i, 0, t));
  }
  disc.tangent_backward(v);
  nn::add_flat_grads(params, saved, T(1));

  auto real_scores = disc.forward(real, mode);
  disc.backward(std::vector<T>(n, T(-1.0 / n)));
  auto fake_scores = disc.forward(fake, mode);
  disc.backward(std::vector<T>(n, T(1.0 / n)));
  for (int i = 0; i < n; ++i) loss.wasserstein += (double(fake_scores[i]) - real_scores[i]) / n;
  return loss;
}

struct GanStepStats {
  std::int64_t step = 0;
  double critic_loss = 0.0;
  double penalty = 0.0;
  double generator_loss = 0.0;
};

struct GanTrainResult {
  std::int64_t critic_updates = 0;
  std::int64_t generator_updates = 0;
  std::vector<GanStepStats> history;
};

using GanCheckpointHook = std::function<void(std::int64_t step)>;

// `steps` generator updates, each preceded by disc_updates_per_gen critic
// updates. Real slices are the first slice_len samples of each example.
template <typename T>
GanTrainResult train_wavegan(Generator<T>& gen, Discriminator<T>& disc,
                             const std::vector<Waveform>& corpus, std::int64_t steps,
                             std::uint64_t seed, std::int64_t checkpoint_every = 0,
                             const GanCheckpointHook& on_checkpoint = {}) {
  const auto& cfg = gen.config();
  WAVEX_REQUIRE(static_cast<int>(corpus.size()) >= cfg.batch_size,
                "train_wavegan: corpus smaller than one batch");
  Rng rng(derive_seed(seed, "wavegan.train"));
  nn::Adam<T> gopt({cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  nn::Adam<T> dopt({cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  const int n = cfg.batch_size;
  const auto len = static_cast<std::size_t>(cfg.slice_len);

  std::vector<Waveform> slices;
  slices.reserve(corpus.size());
  for (const auto& w : corpus) {
    std::vector<float> s(len, 0.0f);
    std::copy_n(w.samples.begin(), std::min(len, w.size()), s.begin());
    slices.emplace_back(std::move(s), w.sample_rate);
  }
  std::uniform_int_distribution<std::size_t> pick(0, slices.size() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  GanTrainResult result;
  for (std::int64_t step = 1; step <= steps; ++step) {
    GanStepStats stats;
    stats.step = step;
    for (int k = 0; k < cfg.disc_updates_per_gen; ++k) {
      std::vector<Waveform> batch;
      for (int i = 0; i < n; ++i) batch.push_back(slices[pick(rng)]);
      auto real = to_tensor_batch<T>(batch);
      auto fake = gen.infer(sample_latents<T>(n, cfg.latent_dim, rng));
      std::vector<double> interp(n);
      for (auto& a : interp) a = u01(rng);
      disc.zero_grad();
      auto loss = critic_loss_and_grad(disc, real, fake, interp, rng, cfg.gp_lambda);
      if (!std::isfinite(loss.total()) || std::abs(loss.total()) > 1e4)
        throw TrainingDiverged("critic loss diverged at step " + std::to_string(step));
      dopt.step(disc.params());
      ++result.critic_updates;
      stats.critic_loss = loss.total();
      stats.penalty = loss.penalty;
    }
    gen.zero_grad();
    disc.zero_grad();
    auto fake = gen.forward(sample_latents<T>(n, cfg.latent_dim, rng));
    nn::Mode mode{true, &rng, false};
    auto scores = disc.forward(fake, mode);
    double gl = 0;
    for (auto s : scores) gl -= double(s) / n;
    auto dx = disc.backward(std::vector<T>(n, T(-1.0 / n)));
    gen.backward(dx);
    gopt.step(gen.params());
    ++result.generator_updates;
    stats.generator_loss = gl;
    result.history.push_back(stats);
    if (checkpoint_every > 0 && on_checkpoint && step % checkpoint_every == 0) on_checkpoint(step);
  }
  return result;
}

// Deterministic given seed; latents drawn U([-1,1]^latent_dim).
template <typename T>
std::vector<Waveform> sample_generator(const Generator<T>& gen, std::size_t count,
                                       std::uint64_t seed, std::size_t batch = 64) {
  WAVEX_REQUIRE(count >= 1, "sample_generator: count must be >= 1");
  const auto& cfg = gen.config();
  Rng rng(derive_seed(seed, "wavegan.sample"));
  std::vector<Waveform> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto n = static_cast<int>(std::min(batch, count - out.size()));
    auto y = gen.infer(sample_latents<T>(n, cfg.latent_dim, rng));
    for (int i = 0; i < n; ++i) {
      std::vector<float> s(y.ptr(i), y.ptr(i) + y.l);
      out.emplace_back(std::move(s), cfg.sample_rate);
    }
  }
  return out;
}

}  // namespace wavex
