// include/wavex/train.hpp

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
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/audio.hpp"
#include "wavex/corpus.hpp"
#include "wavex/knagg_cnn.hpp"
#include "wavex/nn.hpp"

namespace wavex {

enum class LossKind { hard_ce, soft_ce };

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::hard_ce;
  int frozen_layers = 0;  // layers 1..k excluded from updates

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lr", c.lr},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed},
       {"loss", c.loss == LossKind::soft_ce ? "soft_ce" : "hard_ce"},
       {"frozen_layers", c.frozen_layers}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.lr = j.value("lr", d.lr);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.seed = j.value("seed", d.seed);
  const std::string loss = j.value("loss", std::string("hard_ce"));
  if (loss != "hard_ce" && loss != "soft_ce") throw ConfigError("unknown loss: " + loss);
  c.loss = loss == "soft_ce" ? LossKind::soft_ce : LossKind::hard_ce;
  c.frozen_layers = j.value("frozen_layers", d.frozen_layers);
}

// Training data: waveforms with either hard labels or probability targets.
struct LabeledSet {
  std::vector<Waveform> waves;
  std::vector<int> hard;                 // used by hard_ce
  std::vector<std::vector<float>> soft;  // used by soft_ce

  std::size_t size() const { return waves.size(); }

  static LabeledSet from_corpus(const SpeakerCorpus& c) {
    LabeledSet s;
    s.waves = c.waves();
    s.hard = c.labels();
    return s;
  }
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> eval_accuracy;
};

using EvalHook = std::function<double()>;

template <typename T>
std::vector<EpochMetrics> train_classifier(KnaggCNN<T>& model, const LabeledSet& data,
                                           const TrainConfig& tc, const EvalHook& eval = {}) {
  tc.validate();
  WAVEX_REQUIRE(!data.waves.empty(), "train_classifier: empty training set");
  const int n_classes = model.n_classes();
  const bool soft = tc.loss == LossKind::soft_ce;
  if (soft) {
    WAVEX_REQUIRE(data.soft.size() == data.size(), "train_classifier: missing soft targets");
    for (const auto& p : data.soft) {
      WAVEX_REQUIRE(static_cast<int>(p.size()) == n_classes, "soft target width mismatch");
      const double s = std::accumulate(p.begin(), p.end(), 0.0);
      WAVEX_REQUIRE(std::abs(s - 1.0) <= 1e-4, "soft targets must sum to 1");
    }
  } else {
    WAVEX_REQUIRE(data.hard.size() == data.size(), "train_classifier: missing hard labels");
    for (int y : data.hard)
      WAVEX_REQUIRE(y >= 0 && y < n_classes, "train_classifier: label out of range");
  }

  std::vector<nn::Param<T>*> trainable;
  for (int l = tc.frozen_layers + 1; l <= KnaggCNN<T>::kLayers; ++l) {
    auto p = model.layer_params(l);
    trainable.insert(trainable.end(), p.begin(), p.end());
  }
  nn::Adam<T> adam({tc.lr, tc.beta1, tc.beta2, 1e-8});
  Rng rng(derive_seed(tc.seed, "train.shuffle"));
  const auto input_len = static_cast<std::size_t>(model.config().input_len);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochMetrics> history;
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(tc.batch_size)) {
      const std::size_t n = std::min<std::size_t>(tc.batch_size, order.size() - start);
      std::vector<Waveform> batch;
      batch.reserve(n);
      nn::RowMat<T> targets = nn::RowMat<T>::Zero(Eigen::Index(n), n_classes);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = order[start + i];
        batch.push_back(random_window(data.waves[idx], input_len, rng));
        if (soft)
          for (int c = 0; c < n_classes; ++c) targets(Eigen::Index(i), c) = T(data.soft[idx][c]);
        else
          targets(Eigen::Index(i), data.hard[idx]) = T(1);
      }
      nn::Mode mode{true, &rng, false};
      model.zero_grad();
      auto logits = model.forward(to_tensor<T>(batch), mode);
      nn::RowMat<T> dlogits;
      const double loss = nn::soft_cross_entropy<T>(logits, targets, &dlogits);
      if (!std::isfinite(loss))
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
      model.backward(dlogits);
      adam.step(trainable);
      loss_sum += loss * double(n);
      for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index pred, truth;
        logits.row(i).maxCoeff(&pred);
        targets.row(i).maxCoeff(&truth);
        correct += pred == truth;
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_sum / double(data.size());
    m.train_accuracy = double(correct) / double(data.size());
    if (eval) m.eval_accuracy = eval();
    history.push_back(m);
  }
  return history;
}

// ---------------------------------------------------------------------------
// Partial weight transfer

struct LayerMask {
  int transfer_upto = 0;
  bool freeze = false;
};

// Copies layers 1..k (parameters and batchnorm buffers) from donor into
// student. Layers after k are untouched.
template <typename T>
void transfer_layers(KnaggCNN<T>& student, const KnaggCNN<T>& donor, const LayerMask& mask) {
  if (mask.transfer_upto < 0 || mask.transfer_upto > KnaggCNN<T>::kLayers)
    throw ConfigError("transfer_layers: layer count out of range");
  // Only the transferred layers must agree; a donor trained for another task
  // may have a different classifier head.
  for (int l = 1; l <= mask.transfer_upto; ++l) {
    auto dst = student.layer_state(l);
    auto src = donor.layer_state(l);
    bool same = dst.size() == src.size();
    for (std::size_t i = 0; same && i < dst.size(); ++i) same = dst[i]->shape == src[i]->shape;
    if (!same) throw ConfigError("transfer_layers: layer " + std::to_string(l) + " shape differs between student and donor");
  }
  for (int l = 1; l <= mask.transfer_upto; ++l) {
    auto dst = student.layer_state(l);
    auto src = donor.layer_state(l);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
  }
}

}  // namespace wavex
