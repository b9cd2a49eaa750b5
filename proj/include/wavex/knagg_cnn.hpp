// include/wavex/knagg_cnn.hpp

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

// Raw-waveform speaker classifier: four strided 1D convolution blocks
// (conv, batchnorm, ReLU, optional spatial dropout), global average pooling,
// then an embedding layer and the class layer.

#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavex/audio.hpp"
#include "wavex/nn.hpp"

namespace wavex {

struct KnaggCNNConfig {
  int n_classes = 2;
  int input_len = kCanonicalInputLen;
  std::array<int, 4> base_channels{128, 128, 256, 512};
  double width_scale = 1.0;
  int first_kernel = 32;
  int kernel = 8;
  int stride = 4;
  int embedding_dim = 128;
  bool batchnorm = true;
  double dropout_prob = 0.0;

  std::array<int, 4> channels() const {
    std::array<int, 4> c{};
    for (int i = 0; i < 4; ++i)
      c[i] = std::max(1, static_cast<int>(std::lround(base_channels[i] * width_scale)));
    return c;
  }

  int frames_after_convs() const {
    int len = input_len;
    for (int i = 0; i < 4; ++i) len /= stride;
    return len;
  }

  void validate() const {
    if (n_classes < 2) throw ConfigError("classifier needs n_classes >= 2");
    if (stride < 1 || kernel < stride || first_kernel < stride)
      throw ConfigError("classifier kernels must be at least the stride");
    if ((kernel - stride) % 2 != 0 || (first_kernel - stride) % 2 != 0)
      throw ConfigError("kernel minus stride must be even for centred padding");
    int len = input_len;
    for (int i = 0; i < 4; ++i) {
      if (len % stride != 0) throw ConfigError("input_len must be divisible by stride^4");
      len /= stride;
    }
    if (len < 1) throw ConfigError("input_len too short for four strided convolutions");
    if (width_scale <= 0.0 || embedding_dim < 1) throw ConfigError("bad classifier width");
    if (dropout_prob < 0.0 || dropout_prob >= 1.0) throw ConfigError("dropout must be in [0,1)");
  }

  bool operator==(const KnaggCNNConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const KnaggCNNConfig& c) {
  j = {{"n_classes", c.n_classes},         {"input_len", c.input_len},
       {"base_channels", c.base_channels}, {"width_scale", c.width_scale},
       {"first_kernel", c.first_kernel},   {"kernel", c.kernel},
       {"stride", c.stride},               {"embedding_dim", c.embedding_dim},
       {"batchnorm", c.batchnorm},         {"dropout_prob", c.dropout_prob}};
}

inline void from_json(const nlohmann::json& j, KnaggCNNConfig& c) {
  KnaggCNNConfig d;
  c.n_classes = j.value("n_classes", d.n_classes);
  c.input_len = j.value("input_len", d.input_len);
  c.base_channels = j.value("base_channels", d.base_channels);
  c.width_scale = j.value("width_scale", d.width_scale);
  c.first_kernel = j.value("first_kernel", d.first_kernel);
  c.kernel = j.value("kernel", d.kernel);
  c.stride = j.value("stride", d.stride);
  c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
  c.batchnorm = j.value("batchnorm", d.batchnorm);
  c.dropout_prob = j.value("dropout_prob", d.dropout_prob);
}

template <typename T>
nn::Tensor<T> to_tensor(std::span<const Waveform> waves) {
  WAVEX_REQUIRE(!waves.empty(), "to_tensor: empty batch");
  const auto len = waves.front().size();
  nn::Tensor<T> x(static_cast<int>(waves.size()), 1, static_cast<int>(len));
  for (std::size_t i = 0; i < waves.size(); ++i) {
    if (waves[i].size() != len) throw ShapeError("to_tensor: ragged batch");
    std::copy(waves[i].samples.begin(), waves[i].samples.end(), x.ptr(static_cast<int>(i)));
  }
  return x;
}

template <typename T>
class KnaggCNN {
 public:
  // Parameterised layers in order: conv blocks 1-4, embedding, classifier.
  static constexpr int kLayers = 6;
  static constexpr int kConvBlocks = 4;

  KnaggCNN() = default;

  KnaggCNN(const KnaggCNNConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    const auto ch = cfg_.channels();
    Rng rng(derive_seed(seed, "knagg.init"));
    int in = 1;
    for (int b = 0; b < kConvBlocks; ++b) {
      const int k = b == 0 ? cfg_.first_kernel : cfg_.kernel;
      const int pad = (k - cfg_.stride) / 2;
      const std::string name = "conv" + std::to_string(b + 1);
      conv_[b] = nn::Conv1d<T>(name, in, ch[b], k, cfg_.stride, pad, pad);
      conv_[b].init(rng);
      bn_[b] = nn::BatchNorm1d<T>("bn" + std::to_string(b + 1), ch[b]);
      relu_[b] = nn::LeakyReLU<T>(0.0);
      drop_[b] = nn::SpatialDropout<T>(cfg_.dropout_prob);
      in = ch[b];
    }
    fc1_ = nn::Linear<T>("fc1", ch[3], cfg_.embedding_dim);
    fc1_.init(rng);
    fc2_ = nn::Linear<T>("fc2", cfg_.embedding_dim, cfg_.n_classes);
    fc2_.init(rng);
  }

  const KnaggCNNConfig& config() const { return cfg_; }
  int n_classes() const { return cfg_.n_classes; }

  nn::RowMat<T> forward(const nn::Tensor<T>& x, const nn::Mode& mode) {
    check_input(x);
    nn::Tensor<T> h = x;
    for (int b = 0; b < kConvBlocks; ++b) {
      h = block_pre(b, h, mode.train);
      h = relu_[b].forward(h);
      h = drop_[b].forward(h, mode);
    }
    h = pool_.forward(h);
    h = fc1_.forward(h);
    h = fc_relu_.forward(h);
    h = fc2_.forward(h);
    return logits_of(h);
  }

  nn::Tensor<T> backward(const nn::RowMat<T>& dlogits) {
    nn::Tensor<T> g(static_cast<int>(dlogits.rows()), cfg_.n_classes, 1);
    Eigen::Map<nn::RowMat<T>>(g.data.data(), dlogits.rows(), dlogits.cols()) = dlogits;
    g = fc2_.backward(g);
    g = fc_relu_.backward(g);
    g = fc1_.backward(g);
    g = pool_.backward(g);
    for (int b = kConvBlocks - 1; b >= 0; --b) {
      g = drop_[b].backward(g);
      g = relu_[b].backward(g);
      g = block_pre_backward(b, g);
    }
    return g;
  }

  // Eval-mode logits without touching caches; safe for concurrent callers.
  nn::RowMat<T> infer(const nn::Tensor<T>& x) const {
    check_input(x);
    nn::Tensor<T> h = x;
    for (int b = 0; b < kConvBlocks; ++b) {
      h = conv_[b].infer(h);
      if (cfg_.batchnorm) h = bn_[b].infer(h);
      h = relu_[b].infer(h);
    }
    h = pool_.infer(h);
    h = fc_relu_.infer(fc1_.infer(h));
    return logits_of(fc2_.infer(h));
  }

  // Pre-ReLU response of conv block `layer` (1-based) in eval mode. Accepts
  // any input length long enough for the strided convolutions.
  nn::Tensor<T> block_response(const nn::Tensor<T>& x, int layer) {
    WAVEX_REQUIRE(layer >= 1 && layer <= kConvBlocks, "block_response: layer out of range");
    nn::Tensor<T> h = x;
    for (int b = 0; b < layer; ++b) {
      h = block_pre(b, h, false);
      if (b + 1 < layer) h = relu_[b].forward(h);
    }
    return h;
  }

  nn::Tensor<T> block_response_backward(const nn::Tensor<T>& d, int layer) {
    nn::Tensor<T> g = block_pre_backward(layer - 1, d);
    for (int b = layer - 2; b >= 0; --b) g = block_pre_backward(b, relu_[b].backward(g));
    return g;
  }

  nn::Tensor<T> block_response_infer(const nn::Tensor<T>& x, int layer) const {
    WAVEX_REQUIRE(layer >= 1 && layer <= kConvBlocks, "block_response: layer out of range");
    nn::Tensor<T> h = x;
    for (int b = 0; b < layer; ++b) {
      h = conv_[b].infer(h);
      if (cfg_.batchnorm) h = bn_[b].infer(h);
      if (b + 1 < layer) h = relu_[b].infer(h);
    }
    return h;
  }

  int block_channels(int layer) const { return cfg_.channels()[layer - 1]; }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (int l = 1; l <= kLayers; ++l) {
      auto p = layer_params(l);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  // Trainable parameters of one layer (1-based).
  std::vector<nn::Param<T>*> layer_params(int layer) {
    WAVEX_REQUIRE(layer >= 1 && layer <= kLayers, "layer index out of range");
    if (layer <= kConvBlocks) {
      auto p = conv_[layer - 1].params();
      if (cfg_.batchnorm) {
        auto q = bn_[layer - 1].params();
        p.insert(p.end(), q.begin(), q.end());
      }
      return p;
    }
    return layer == 5 ? fc1_.params() : fc2_.params();
  }

  // Parameters plus non-trainable buffers of one layer.
  std::vector<nn::Param<T>*> layer_state(int layer) {
    auto p = layer_params(layer);
    if (layer <= kConvBlocks && cfg_.batchnorm) {
      auto b = bn_[layer - 1].buffers();
      p.insert(p.end(), b.begin(), b.end());
    }
    return p;
  }

  std::vector<nn::Param<T>*> state() {
    std::vector<nn::Param<T>*> out;
    for (int l = 1; l <= kLayers; ++l) {
      auto p = layer_state(l);
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

  std::vector<const nn::Param<T>*> layer_state(int layer) const {
    auto s = const_cast<KnaggCNN*>(this)->layer_state(layer);
    return {s.begin(), s.end()};
  }

  std::vector<const nn::Param<T>*> state() const {
    auto s = const_cast<KnaggCNN*>(this)->state();
    return {s.begin(), s.end()};
  }

  void zero_grad() { nn::zero_grad(params()); }

  nn::Conv1d<T>& conv(int layer) { return conv_[layer - 1]; }
  const nn::Conv1d<T>& conv(int layer) const { return conv_[layer - 1]; }

 private:
  void check_input(const nn::Tensor<T>& x) const {
    if (x.c != 1 || x.l != cfg_.input_len)
      throw ShapeError("classifier expects mono input of length " +
                       std::to_string(cfg_.input_len) + ", got " + std::to_string(x.l));
  }

  nn::Tensor<T> block_pre(int b, const nn::Tensor<T>& x, bool train) {
    nn::Tensor<T> h = conv_[b].forward(x);
    if (cfg_.batchnorm) h = bn_[b].forward(h, train);
    return h;
  }

  nn::Tensor<T> block_pre_backward(int b, const nn::Tensor<T>& d) {
    nn::Tensor<T> g = cfg_.batchnorm ? bn_[b].backward(d) : d;
    return conv_[b].backward(g);
  }

  nn::RowMat<T> logits_of(const nn::Tensor<T>& h) const {
    return Eigen::Map<const nn::RowMat<T>>(h.data.data(), h.n, cfg_.n_classes);
  }

  KnaggCNNConfig cfg_;
  std::array<nn::Conv1d<T>, kConvBlocks> conv_;
  std::array<nn::BatchNorm1d<T>, kConvBlocks> bn_;
  std::array<nn::LeakyReLU<T>, kConvBlocks> relu_;
  std::array<nn::SpatialDropout<T>, kConvBlocks> drop_;
  nn::GlobalAvgPool<T> pool_;
  nn::Linear<T> fc1_;
  nn::LeakyReLU<T> fc_relu_{0.0};
  nn::Linear<T> fc2_;
};

// Softmax probabilities in eval mode, batched.
template <typename T>
std::vector<std::vector<float>> predict_proba(const KnaggCNN<T>& model,
                                              std::span<const Waveform> waves,
                                              std::size_t batch = 64) {
  std::vector<std::vector<float>> out;
  out.reserve(waves.size());
  for (std::size_t i = 0; i < waves.size(); i += batch) {
    const auto n = std::min(batch, waves.size() - i);
    auto p = nn::softmax_rows<T>(model.infer(to_tensor<T>(waves.subspan(i, n))));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      std::vector<float> row(static_cast<std::size_t>(p.cols()));
      for (Eigen::Index c = 0; c < p.cols(); ++c) row[std::size_t(c)] = static_cast<float>(p(r, c));
      out.push_back(std::move(row));
    }
  }
  return out;
}

template <typename T>
std::vector<int> predict_labels(const KnaggCNN<T>& model, std::span<const Waveform> waves) {
  std::vector<int> out;
  for (const auto& p : predict_proba(model, waves)) out.push_back(nn::argmax(p));
  return out;
}

template <typename T>
double accuracy(const KnaggCNN<T>& model, std::span<const Waveform> waves,
                const std::vector<int>& labels) {
  if (waves.empty()) return 0.0;
  const auto pred = predict_labels(model, waves);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
  return double(ok) / double(pred.size());
}

// Copy a model into a different scalar type (used for double-precision checks).
template <typename To, typename From>
KnaggCNN<To> cast_model(const KnaggCNN<From>& m) {
  KnaggCNN<To> out(m.config(), 0);
  auto src = m.state();
  auto dst = out.state();
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < src[i]->size(); ++j) dst[i]->value[j] = To(src[i]->value[j]);
  return out;
}

}  // namespace wavex
