// tests/gradcheck.hpp

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

// Central finite differences against the analytic parameter gradients of the
// classifier loss and the full critic loss (gradient penalty included).

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "wavex/knagg_cnn.hpp"
#include "wavex/wavegan.hpp"

namespace wavex::testing {

struct GradCheck {
  int checked = 0;
  int failed = 0;
  double worst_rel = 0.0;
  std::string worst_name;
};

// The floor sits above central-difference rounding noise (about eps*|loss|/h,
// ~1e-10 at h=1e-6). Conv biases feeding batch norm have an exact zero
// gradient, and without the floor that noise alone reads as a 1e-3 error.
inline double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Perturbs `count` randomly chosen scalars drawn across all of `params`.
template <typename T>
GradCheck finite_difference(const std::vector<nn::Param<T>*>& params, const std::vector<std::vector<T>>& analytic,
                            const std::function<double()>& loss, int count, std::uint64_t seed, double tol,
                            double h = 1e-6) {
  GradCheck r;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_param(0, params.size() - 1);
  for (int i = 0; i < count; ++i) {
    auto* p = params[pick_param(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, p->size() - 1);
    const std::size_t j = pick(rng);
    const std::size_t pi = std::size_t(std::find(params.begin(), params.end(), p) - params.begin());
    const T saved = p->value[j];
    p->value[j] = saved + T(h);
    const double up = loss();
    p->value[j] = saved - T(h);
    const double down = loss();
    p->value[j] = saved;
    const double numeric = (up - down) / (2 * h);
    const double err = rel_error(double(analytic[pi][j]), numeric);
    ++r.checked;
    if (err > tol) ++r.failed;
    if (err > r.worst_rel) {
      r.worst_rel = err;
      r.worst_name = p->name + "[" + std::to_string(j) + "]";
    }
  }
  return r;
}

// Cross-entropy of a small double-precision classifier in training mode
// (batch statistics in the normalisation layers).
inline GradCheck classifier_gradcheck(int count, std::uint64_t seed, double tol = 1e-3) {
  KnaggCNNConfig cfg;
  cfg.n_classes = 5;
  cfg.input_len = 256;
  cfg.width_scale = 1.0 / 32;
  cfg.embedding_dim = 12;
  KnaggCNN<double> model(cfg, seed);
  Rng rng(derive_seed(seed, "gradcheck.data"));
  std::normal_distribution<double> g(0.0, 0.3);
  nn::Tensor<double> x(4, 1, cfg.input_len);
  for (auto& v : x.data) v = g(rng);
  const std::vector<int> labels{0, 3, 1, 4};

  auto loss = [&]() {
    nn::Mode mode{true, &rng, false};
    auto logits = model.forward(x, mode);
    return nn::hard_cross_entropy<double>(logits, labels, nullptr);
  };
  model.zero_grad();
  nn::Mode mode{true, &rng, false};
  auto logits = model.forward(x, mode);
  nn::RowMat<double> d;
  nn::hard_cross_entropy<double>(logits, labels, &d);
  model.backward(d);
  auto params = model.params();
  std::vector<std::vector<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  return finite_difference(params, analytic, loss, count, derive_seed(seed, "gradcheck.pick"), tol);
}

// WGAN-GP critic loss. Phase-shuffle draws are replayed from a fixed seed so
// every evaluation sees the same offsets.
inline GradCheck critic_gradcheck(int count, std::uint64_t seed, double tol = 1e-3) {
  WaveGANConfig cfg;
  cfg.slice_len = 256;
  cfg.dim_mult = 2;
  cfg.batch_size = 3;
  Discriminator<double> disc(cfg, seed);
  Rng rng(derive_seed(seed, "gradcheck.data"));
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  nn::Tensor<double> real(3, 1, cfg.slice_len), fake(3, 1, cfg.slice_len);
  for (auto& v : real.data) v = u(rng);
  for (auto& v : fake.data) v = u(rng);
  const std::vector<double> interp{0.2, 0.55, 0.9};
  const auto noise_seed = derive_seed(seed, "gradcheck.shuffle");

  auto loss = [&]() {
    Rng r(noise_seed);
    disc.zero_grad();
    return critic_loss_and_grad(disc, real, fake, interp, r, cfg.gp_lambda).total();
  };
  loss();
  auto params = disc.params();
  std::vector<std::vector<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);
  return finite_difference(params, analytic, loss, count, derive_seed(seed, "gradcheck.pick"), tol);
}

}  // namespace wavex::testing
