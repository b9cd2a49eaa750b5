// include/wavex/nn.hpp

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

// Minimal 1D neural-network toolkit with hand-written backward passes.
// Activations are [batch, channels, length] tensors. Layers are value types:
// copying a layer copies its parameters. `forward` caches what `backward`
// needs; `infer` is the const, cache-free evaluation path.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wavex/common.hpp"

namespace wavex::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Tensor {
  int n = 0, c = 0, l = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int l_, T fill = T(0))
      : n(n_), c(c_), l(l_), data(std::size_t(n_) * c_ * l_, fill) {}

  std::size_t size() const { return data.size(); }
  T* ptr(int i, int ch = 0) { return data.data() + (std::size_t(i) * c + ch) * l; }
  const T* ptr(int i, int ch = 0) const { return data.data() + (std::size_t(i) * c + ch) * l; }
  T& at(int i, int ch, int t) { return data[(std::size_t(i) * c + ch) * l + t]; }
  T at(int i, int ch, int t) const { return data[(std::size_t(i) * c + ch) * l + t]; }
};

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, std::vector<int> s, bool train = true)
      : name(std::move(n)), shape(std::move(s)), trainable(train) {
    std::size_t count = 1;
    for (int d : shape) count *= std::size_t(d);
    value.assign(count, T(0));
    grad.assign(count, T(0));
  }
  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

struct Mode {
  bool train = false;
  Rng* rng = nullptr;         // phase shuffle / dropout draws
  bool reuse_noise = false;   // replay the previous draws
};

// PyTorch-style default init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
void init_uniform(Param<T>& p, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(std::max(fan_in, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : p.value) v = static_cast<T>(u(rng));
}

// Glorot-uniform weights; callers zero the bias separately.
template <typename T>
void init_glorot(Param<T>& p, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / double(std::max(fan_in + fan_out, 1)));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : p.value) v = static_cast<T>(u(rng));
}

// cols(c*k + j, i*out_len + t) = x[i, c, t*stride + j - pad_l], zero outside.
template <typename T>
Mat<T> im2col(const Tensor<T>& x, int k, int stride, int pad_l, int out_len) {
  Mat<T> cols(Eigen::Index(x.c) * k, Eigen::Index(x.n) * out_len);
  const Eigen::Index rows = cols.rows();
  for (int i = 0; i < x.n; ++i)
    for (int t = 0; t < out_len; ++t) {
      T* dst = cols.data() + (Eigen::Index(i) * out_len + t) * rows;
      const int base = t * stride - pad_l;
      for (int ch = 0; ch < x.c; ++ch) {
        const T* src = x.ptr(i, ch);
        for (int j = 0; j < k; ++j) {
          const int idx = base + j;
          dst[ch * k + j] = (idx >= 0 && idx < x.l) ? src[idx] : T(0);
        }
      }
    }
  return cols;
}

// Adjoint of im2col: scatter-add columns back into x (which must be sized).
template <typename T>
void col2im(const Mat<T>& cols, Tensor<T>& x, int k, int stride, int pad_l, int out_len) {
  const Eigen::Index rows = cols.rows();
  for (int i = 0; i < x.n; ++i)
    for (int t = 0; t < out_len; ++t) {
      const T* src = cols.data() + (Eigen::Index(i) * out_len + t) * rows;
      const int base = t * stride - pad_l;
      for (int ch = 0; ch < x.c; ++ch) {
        T* dst = x.ptr(i, ch);
        for (int j = 0; j < k; ++j) {
          const int idx = base + j;
          if (idx >= 0 && idx < x.l) dst[idx] += src[ch * k + j];
        }
      }
    }
}

// [n, c, l] tensor <-> (c x n*l) matrix.
template <typename T>
Mat<T> channels_by_positions(const Tensor<T>& x) {
  Mat<T> m(x.c, Eigen::Index(x.n) * x.l);
  for (int i = 0; i < x.n; ++i)
    for (int ch = 0; ch < x.c; ++ch) {
      const T* src = x.ptr(i, ch);
      for (int t = 0; t < x.l; ++t) m(ch, Eigen::Index(i) * x.l + t) = src[t];
    }
  return m;
}

template <typename T>
Tensor<T> tensor_from_channels(const Mat<T>& m, int n, int l) {
  Tensor<T> x(n, static_cast<int>(m.rows()), l);
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < x.c; ++ch) {
      T* dst = x.ptr(i, ch);
      for (int t = 0; t < l; ++t) dst[t] = m(ch, Eigen::Index(i) * l + t);
    }
  return x;
}

// ---------------------------------------------------------------------------

template <typename T>
class Conv1d {
 public:
  Param<T> weight, bias;  // weight [out, in, k]
  int in_ch = 0, out_ch = 0, k = 0, stride = 1, pad_l = 0, pad_r = 0;

  Conv1d() = default;
  Conv1d(const std::string& name, int in, int out, int kernel, int stride_, int pad_left,
         int pad_right)
      : weight(name + ".weight", {out, in, kernel}),
        bias(name + ".bias", {out}),
        in_ch(in), out_ch(out), k(kernel), stride(stride_), pad_l(pad_left), pad_r(pad_right) {}

  void init(Rng& rng) {
    init_uniform(weight, in_ch * k, rng);
    init_uniform(bias, in_ch * k, rng);
  }

  int out_len(int len) const { return (len + pad_l + pad_r - k) / stride + 1; }

  Tensor<T> forward(const Tensor<T>& x) {
    in_n_ = x.n;
    in_len_ = x.l;
    cols_ = im2col(x, k, stride, pad_l, out_len(x.l));
    return apply(cols_, x.n, out_len(x.l));
  }

  Tensor<T> infer(const Tensor<T>& x) const {
    check(x);
    return apply(im2col(x, k, stride, pad_l, out_len(x.l)), x.n, out_len(x.l));
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Mat<T> g = channels_by_positions(dy);
    Eigen::Map<RowMat<T>> dw(weight.grad.data(), out_ch, Eigen::Index(in_ch) * k);
    dw.noalias() += g * cols_.transpose();
    for (int o = 0; o < out_ch; ++o) bias.grad[o] += g.row(o).sum();
    Eigen::Map<const RowMat<T>> w(weight.value.data(), out_ch, Eigen::Index(in_ch) * k);
    const Mat<T> dcols = w.transpose() * g;
    Tensor<T> dx(in_n_, in_ch, in_len_);
    col2im(dcols, dx, k, stride, pad_l, dy.l);
    return dx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

 private:
  void check(const Tensor<T>& x) const {
    if (x.c != in_ch) throw ShapeError("conv1d: channel mismatch");
    if (x.l + pad_l + pad_r < k) throw ShapeError("conv1d: input shorter than kernel");
  }

  Tensor<T> apply(const Mat<T>& cols, int n, int lo) const {
    Eigen::Map<const RowMat<T>> w(weight.value.data(), out_ch, Eigen::Index(in_ch) * k);
    Mat<T> y = w * cols;
    for (int o = 0; o < out_ch; ++o) y.row(o).array() += bias.value[o];
    return tensor_from_channels(y, n, lo);
  }

  Mat<T> cols_;
  int in_n_ = 0, in_len_ = 0;
};

// Transposed convolution; the adjoint of a Conv1d from length l*stride to l.
// Output length is exactly input length times stride.
template <typename T>
class ConvTranspose1d {
 public:
  Param<T> weight, bias;  // weight [in, out, k]
  int in_ch = 0, out_ch = 0, k = 0, stride = 1, pad_l = 0;

  ConvTranspose1d() = default;
  ConvTranspose1d(const std::string& name, int in, int out, int kernel, int stride_, int pad_left)
      : weight(name + ".weight", {in, out, kernel}),
        bias(name + ".bias", {out}),
        in_ch(in), out_ch(out), k(kernel), stride(stride_), pad_l(pad_left) {}

  void init(Rng& rng) {
    // PyTorch uses fan_in = out_ch * k for transposed convolutions.
    init_uniform(weight, out_ch * k, rng);
    init_uniform(bias, out_ch * k, rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    x_ = channels_by_positions(x);
    in_n_ = x.n;
    in_len_ = x.l;
    return apply(x_, x.n, x.l);
  }

  Tensor<T> infer(const Tensor<T>& x) const {
    if (x.c != in_ch) throw ShapeError("conv_transpose1d: channel mismatch");
    return apply(channels_by_positions(x), x.n, x.l);
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const Mat<T> gcols = im2col(dy, k, stride, pad_l, in_len_);  // (out*k, n*lin)
    Eigen::Map<RowMat<T>> dw(weight.grad.data(), in_ch, Eigen::Index(out_ch) * k);
    dw.noalias() += x_ * gcols.transpose();
    for (int o = 0; o < out_ch; ++o) {
      T acc = 0;
      for (int i = 0; i < dy.n; ++i) {
        const T* p = dy.ptr(i, o);
        for (int t = 0; t < dy.l; ++t) acc += p[t];
      }
      bias.grad[o] += acc;
    }
    Eigen::Map<const RowMat<T>> w(weight.value.data(), in_ch, Eigen::Index(out_ch) * k);
    const Mat<T> dx = w * gcols;
    return tensor_from_channels(dx, in_n_, in_len_);
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

 private:
  Tensor<T> apply(const Mat<T>& xm, int n, int lin) const {
    Eigen::Map<const RowMat<T>> w(weight.value.data(), in_ch, Eigen::Index(out_ch) * k);
    const Mat<T> cols = w.transpose() * xm;
    Tensor<T> y(n, out_ch, lin * stride);
    col2im(cols, y, k, stride, pad_l, lin);
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < out_ch; ++o) {
        T* p = y.ptr(i, o);
        for (int t = 0; t < y.l; ++t) p[t] += bias.value[o];
      }
    return y;
  }

  Mat<T> x_;
  int in_n_ = 0, in_len_ = 0;
};

template <typename T>
class Linear {
 public:
  Param<T> weight, bias;  // weight [out, in]
  int in_f = 0, out_f = 0;

  Linear() = default;
  Linear(const std::string& name, int in, int out)
      : weight(name + ".weight", {out, in}), bias(name + ".bias", {out}), in_f(in), out_f(out) {}

  void init(Rng& rng) {
    init_uniform(weight, in_f, rng);
    init_uniform(bias, in_f, rng);
  }

  // Input is flattened per example: [n, c, l] with c*l == in_f.
  Tensor<T> forward(const Tensor<T>& x) {
    x_ = x;
    return infer(x);
  }

  Tensor<T> infer(const Tensor<T>& x) const {
    if (std::size_t(x.c) * x.l != std::size_t(in_f)) throw ShapeError("linear: feature mismatch");
    Eigen::Map<const RowMat<T>> xm(x.data.data(), x.n, in_f);
    Eigen::Map<const RowMat<T>> w(weight.value.data(), out_f, in_f);
    Tensor<T> y(x.n, out_f, 1);
    Eigen::Map<RowMat<T>> ym(y.data.data(), x.n, out_f);
    ym.noalias() = xm * w.transpose();
    for (int i = 0; i < x.n; ++i)
      for (int o = 0; o < out_f; ++o) ym(i, o) += bias.value[o];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Eigen::Map<const RowMat<T>> g(dy.data.data(), dy.n, out_f);
    Eigen::Map<const RowMat<T>> xm(x_.data.data(), x_.n, in_f);
    Eigen::Map<RowMat<T>> dw(weight.grad.data(), out_f, in_f);
    dw.noalias() += g.transpose() * xm;
    for (int o = 0; o < out_f; ++o) bias.grad[o] += g.col(o).sum();
    Eigen::Map<const RowMat<T>> w(weight.value.data(), out_f, in_f);
    Tensor<T> dx(x_.n, x_.c, x_.l);
    Eigen::Map<RowMat<T>> dxm(dx.data.data(), x_.n, in_f);
    dxm.noalias() = g * w;
    return dx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

 private:
  Tensor<T> x_;
};

// Per-channel normalisation over (batch, length). Training mode uses batch
// statistics and updates running estimates; eval mode uses the estimates.
template <typename T>
class BatchNorm1d {
 public:
  Param<T> gamma, beta, running_mean, running_var;
  int ch = 0;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm1d() = default;
  BatchNorm1d(const std::string& name, int channels)
      : gamma(name + ".gamma", {channels}),
        beta(name + ".beta", {channels}),
        running_mean(name + ".running_mean", {channels}, false),
        running_var(name + ".running_var", {channels}, false),
        ch(channels) {
    std::fill(gamma.value.begin(), gamma.value.end(), T(1));
    std::fill(running_var.value.begin(), running_var.value.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    train_ = train;
    if (!train) {
      inv_std_.assign(ch, T(0));
      for (int c = 0; c < ch; ++c)
        inv_std_[c] = T(1.0 / std::sqrt(double(running_var.value[c]) + eps));
      xhat_ = normalise(x, running_mean.value, inv_std_);
      return affine(xhat_);
    }
    const double m = double(x.n) * x.l;
    std::vector<T> mean(ch), var(ch);
    inv_std_.assign(ch, T(0));
    for (int c = 0; c < ch; ++c) {
      double s = 0, s2 = 0;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.ptr(i, c);
        for (int t = 0; t < x.l; ++t) s += p[t];
      }
      const double mu = s / m;
      for (int i = 0; i < x.n; ++i) {
        const T* p = x.ptr(i, c);
        for (int t = 0; t < x.l; ++t) s2 += (p[t] - mu) * (p[t] - mu);
      }
      const double v = s2 / m;
      mean[c] = T(mu);
      var[c] = T(v);
      inv_std_[c] = T(1.0 / std::sqrt(v + eps));
      const double unbiased = m > 1 ? v * m / (m - 1) : v;
      running_mean.value[c] = T((1 - momentum) * running_mean.value[c] + momentum * mu);
      running_var.value[c] = T((1 - momentum) * running_var.value[c] + momentum * unbiased);
    }
    xhat_ = normalise(x, mean, inv_std_);
    return affine(xhat_);
  }

  Tensor<T> infer(const Tensor<T>& x) const {
    std::vector<T> inv(ch);
    for (int c = 0; c < ch; ++c) inv[c] = T(1.0 / std::sqrt(double(running_var.value[c]) + eps));
    return affine(normalise(x, running_mean.value, inv));
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, dy.l);
    const double m = double(dy.n) * dy.l;
    for (int c = 0; c < ch; ++c) {
      double sum_dy = 0, sum_dy_xhat = 0;
      for (int i = 0; i < dy.n; ++i) {
        const T* g = dy.ptr(i, c);
        const T* xh = xhat_.ptr(i, c);
        for (int t = 0; t < dy.l; ++t) {
          sum_dy += g[t];
          sum_dy_xhat += g[t] * xh[t];
        }
      }
      gamma.grad[c] += T(sum_dy_xhat);
      beta.grad[c] += T(sum_dy);
      const double gm = gamma.value[c], is = inv_std_[c];
      for (int i = 0; i < dy.n; ++i) {
        const T* g = dy.ptr(i, c);
        const T* xh = xhat_.ptr(i, c);
        T* d = dx.ptr(i, c);
        for (int t = 0; t < dy.l; ++t) {
          if (train_)
            d[t] = T(gm * is * (g[t] - sum_dy / m - xh[t] * sum_dy_xhat / m));
          else
            d[t] = T(gm * is * g[t]);
        }
      }
    }
    return dx;
  }

  std::vector<Param<T>*> params() { return {&gamma, &beta}; }
  std::vector<Param<T>*> buffers() { return {&running_mean, &running_var}; }

 private:
  Tensor<T> normalise(const Tensor<T>& x, const std::vector<T>& mean,
                      const std::vector<T>& inv) const {
    if (x.c != ch) throw ShapeError("batchnorm: channel mismatch");
    Tensor<T> y(x.n, x.c, x.l);
    for (int i = 0; i < x.n; ++i)
      for (int c = 0; c < ch; ++c) {
        const T* p = x.ptr(i, c);
        T* q = y.ptr(i, c);
        for (int t = 0; t < x.l; ++t) q[t] = (p[t] - mean[c]) * inv[c];
      }
    return y;
  }

  Tensor<T> affine(const Tensor<T>& xh) const {
    Tensor<T> y(xh.n, xh.c, xh.l);
    for (int i = 0; i < xh.n; ++i)
      for (int c = 0; c < ch; ++c) {
        const T* p = xh.ptr(i, c);
        T* q = y.ptr(i, c);
        for (int t = 0; t < xh.l; ++t) q[t] = gamma.value[c] * p[t] + beta.value[c];
      }
    return y;
  }

  Tensor<T> xhat_;
  std::vector<T> inv_std_;
  bool train_ = false;
};

// Elementwise activations ----------------------------------------------------

template <typename T>
class LeakyReLU {
 public:
  double slope = 0.0;  // 0 gives a plain ReLU

  LeakyReLU() = default;
  explicit LeakyReLU(double s) : slope(s) {}

  Tensor<T> forward(const Tensor<T>& x) {
    x_ = x;
    return infer(x);
  }
  Tensor<T> infer(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (auto& v : y.data)
      if (v < T(0)) v = T(v * slope);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      if (x_.data[i] < T(0)) dx.data[i] = T(dx.data[i] * slope);
    return dx;
  }

 private:
  Tensor<T> x_;
};

template <typename T>
class Tanh {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    y_ = infer(x);
    return y_;
  }
  Tensor<T> infer(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (auto& v : y.data) v = std::tanh(v);
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      dx.data[i] = T(dx.data[i] * (1 - y_.data[i] * y_.data[i]));
    return dx;
  }

 private:
  Tensor<T> y_;
};

template <typename T>
class GlobalAvgPool {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    len_ = x.l;
    return infer(x);
  }
  Tensor<T> infer(const Tensor<T>& x) const {
    Tensor<T> y(x.n, x.c, 1);
    for (int i = 0; i < x.n; ++i)
      for (int c = 0; c < x.c; ++c) {
        const T* p = x.ptr(i, c);
        double s = 0;
        for (int t = 0; t < x.l; ++t) s += p[t];
        y.at(i, c, 0) = T(s / x.l);
      }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx(dy.n, dy.c, len_);
    for (int i = 0; i < dy.n; ++i)
      for (int c = 0; c < dy.c; ++c) {
        const T g = T(dy.at(i, c, 0) / len_);
        T* p = dx.ptr(i, c);
        for (int t = 0; t < len_; ++t) p[t] = g;
      }
    return dx;
  }

 private:
  int len_ = 0;
};

// Drops whole channels with probability p during training (inverted scaling).
template <typename T>
class SpatialDropout {
 public:
  double p = 0.0;

  SpatialDropout() = default;
  explicit SpatialDropout(double prob) : p(prob) {}

  Tensor<T> forward(const Tensor<T>& x, const Mode& mode) {
    if (!mode.train || p <= 0.0) {
      keep_.clear();
      return x;
    }
    if (!mode.reuse_noise || keep_.size() != std::size_t(x.n) * x.c) {
      WAVEX_REQUIRE(mode.rng != nullptr, "spatial dropout needs an rng in training mode");
      std::bernoulli_distribution drop(p);
      keep_.assign(std::size_t(x.n) * x.c, T(0));
      for (auto& k : keep_) k = drop(*mode.rng) ? T(0) : T(1.0 / (1.0 - p));
    }
    return scale(x);
  }
  Tensor<T> backward(const Tensor<T>& dy) const { return keep_.empty() ? dy : scale(dy); }

 private:
  Tensor<T> scale(const Tensor<T>& x) const {
    Tensor<T> y = x;
    for (int i = 0; i < x.n; ++i)
      for (int c = 0; c < x.c; ++c) {
        T* q = y.ptr(i, c);
        const T s = keep_[std::size_t(i) * x.c + c];
        for (int t = 0; t < x.l; ++t) q[t] *= s;
      }
    return y;
  }
  std::vector<T> keep_;
};

// Reflect-padded random translation by an offset in [-radius, radius], one
// draw per example, applied only in training mode.
template <typename T>
class PhaseShuffle {
 public:
  int radius = 0;

  PhaseShuffle() = default;
  explicit PhaseShuffle(int r) : radius(r) {}

  static int reflect(int idx, int len) {
    if (len == 1) return 0;
    const int period = 2 * (len - 1);
    idx %= period;
    if (idx < 0) idx += period;
    return idx < len ? idx : period - idx;
  }

  static Tensor<T> shift(const Tensor<T>& x, const std::vector<int>& shifts) {
    Tensor<T> y(x.n, x.c, x.l);
    for (int i = 0; i < x.n; ++i)
      for (int c = 0; c < x.c; ++c) {
        const T* p = x.ptr(i, c);
        T* q = y.ptr(i, c);
        for (int t = 0; t < x.l; ++t) q[t] = p[reflect(t - shifts[i], x.l)];
      }
    return y;
  }

  Tensor<T> forward(const Tensor<T>& x, const Mode& mode) {
    if (!mode.train || radius == 0) {
      shifts_.assign(x.n, 0);
      return x;
    }
    if (!mode.reuse_noise || shifts_.size() != std::size_t(x.n)) {
      WAVEX_REQUIRE(mode.rng != nullptr, "phase shuffle needs an rng in training mode");
      std::uniform_int_distribution<int> d(-radius, radius);
      shifts_.resize(x.n);
      for (auto& s : shifts_) s = d(*mode.rng);
    }
    return shift(x, shifts_);
  }

  Tensor<T> backward(const Tensor<T>& dy) const {
    Tensor<T> dx(dy.n, dy.c, dy.l);
    for (int i = 0; i < dy.n; ++i)
      for (int c = 0; c < dy.c; ++c) {
        const T* g = dy.ptr(i, c);
        T* d = dx.ptr(i, c);
        for (int t = 0; t < dy.l; ++t) d[reflect(t - shifts_[i], dy.l)] += g[t];
      }
    return dx;
  }

  const std::vector<int>& last_shifts() const { return shifts_; }

 private:
  std::vector<int> shifts_;
};

// ---------------------------------------------------------------------------
// Optimisation

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over an ordered list of parameters; moment buffers are matched to the
// list by position.
template <typename T>
class Adam {
 public:
  AdamOptions opt;

  Adam() = default;
  explicit Adam(AdamOptions o) : opt(o) {}

  void step(const std::vector<Param<T>*>& params) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
      }
    }
    if (m_.size() != params.size()) throw ShapeError("adam: parameter list changed");
    ++t_;
    const double c1 = 1.0 - std::pow(opt.beta1, double(t_));
    const double c2 = 1.0 - std::pow(opt.beta2, double(t_));
    for (std::size_t j = 0; j < params.size(); ++j) {
      auto& p = *params[j];
      if (!p.trainable) continue;
      auto& m = m_[j];
      auto& v = v_[j];
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double g = p.grad[i];
        m[i] = opt.beta1 * m[i] + (1 - opt.beta1) * g;
        v[i] = opt.beta2 * v[i] + (1 - opt.beta2) * g * g;
        p.value[i] = T(p.value[i] - opt.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opt.eps));
      }
    }
  }

  std::int64_t steps() const { return t_; }

 private:
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

template <typename T>
void zero_grad(const std::vector<Param<T>*>& params) {
  for (auto* p : params) p->zero_grad();
}

template <typename T>
std::vector<T> flat_grads(const std::vector<Param<T>*>& params) {
  std::vector<T> g;
  for (auto* p : params) g.insert(g.end(), p->grad.begin(), p->grad.end());
  return g;
}

template <typename T>
void add_flat_grads(const std::vector<Param<T>*>& params, const std::vector<T>& g, T scale) {
  std::size_t off = 0;
  for (auto* p : params)
    for (auto& v : p->grad) v += scale * g[off++];
}

// ---------------------------------------------------------------------------
// Losses

template <typename T>
RowMat<T> softmax_rows(const RowMat<T>& logits) {
  RowMat<T> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T mx = logits.row(i).maxCoeff();
    double s = 0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      p(i, j) = std::exp(logits(i, j) - mx);
      s += p(i, j);
    }
    p.row(i) /= T(s);
  }
  return p;
}

// Mean cross-entropy against probability targets; fills dlogits.
template <typename T>
double soft_cross_entropy(const RowMat<T>& logits, const RowMat<T>& targets, RowMat<T>* dlogits) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols())
    throw ShapeError("cross-entropy: target shape mismatch");
  const Eigen::Index n = logits.rows();
  double loss = 0;
  if (dlogits) dlogits->resize(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mx = logits.row(i).maxCoeff();
    double s = 0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) s += std::exp(double(logits(i, j) - mx));
    const double lse = double(mx) + std::log(s);
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      const double logq = double(logits(i, j)) - lse;
      if (targets(i, j) != T(0)) loss -= double(targets(i, j)) * logq;
      if (dlogits) (*dlogits)(i, j) = T((std::exp(logq) - double(targets(i, j))) / double(n));
    }
  }
  return loss / double(n);
}

template <typename T>
double hard_cross_entropy(const RowMat<T>& logits, const std::vector<int>& labels,
                          RowMat<T>* dlogits) {
  RowMat<T> onehot = RowMat<T>::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[std::size_t(i)];
    if (y < 0 || y >= logits.cols()) throw ShapeError("cross-entropy: label out of range");
    onehot(i, y) = T(1);
  }
  return soft_cross_entropy(logits, onehot, dlogits);
}

// Lowest index wins ties.
template <typename Vec>
int argmax(const Vec& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace wavex::nn
