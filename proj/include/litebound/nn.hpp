// Copyright 2026 The litebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LITEBOUND_NN_HPP
#define LITEBOUND_NN_HPP

// Minimal layer toolkit with hand-written backward passes. Layers are
// stateless apart from their parameters; activations needed for backward
// live in caller-owned cache structs so evaluation can run without them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "litebound/error.hpp"
#include "litebound/resample.hpp"
#include "litebound/tensor.hpp"

namespace litebound::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

/// A trainable tensor and its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::size_t size) : name(std::move(n)), value(size, T{}), grad(size, T{}) {}
  std::size_t size() const noexcept { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T{}); }
};

// ---------------------------------------------------------------------------

template <typename T>
struct ConvCache {
  RowMatrix<T> columns;  // im2col of the input (K*K*Cin x H*W); the input itself for 1x1
  int height = 0;
  int width = 0;
};

/// Stride-1 convolution with "same" zero padding. Kernel size 1 or 3.
template <typename T>
class Conv2d {
public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel)
      : in_(in_channels), out_(out_channels), k_(kernel),
        weight_(name + ".weight", static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
        bias_(name + ".bias", static_cast<std::size_t>(out_channels)) {
    if (kernel != 1 && kernel != 3) throw ConfigError("Conv2d: kernel must be 1 or 3");
    if (in_channels <= 0 || out_channels <= 0) throw ConfigError("Conv2d: channel counts must be positive");
  }

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }
  int kernel() const noexcept { return k_; }
  Parameter<T>& weight() noexcept { return weight_; }
  Parameter<T>& bias() noexcept { return bias_; }
  const Parameter<T>& weight() const noexcept { return weight_; }
  const Parameter<T>& bias() const noexcept { return bias_; }

  /// He-normal weights, zero bias.
  void init(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(2.0 / (in_ * k_ * k_)));
    for (auto& w : weight_.value) w = static_cast<T>(n(rng));
    std::fill(bias_.value.begin(), bias_.value.end(), T{});
  }

  Tensor<T> forward(const Tensor<T>& x, ConvCache<T>* cache) const {
    if (x.channels() != in_)
      throw ShapeError(weight_.name + ": expected " + std::to_string(in_) + " input channels, got " +
                       std::to_string(x.channels()));
    const int h = x.height(), w = x.width();
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
    RowMatrix<T> local;
    RowMatrix<T>& cols = cache ? cache->columns : local;
    im2col(x, cols);
    Tensor<T> y(out_, h, w);
    MatrixMap<T> ym(y.data(), out_, hw);
    ConstMatrixMap<T> wm(weight_.value.data(), out_, static_cast<Eigen::Index>(in_) * k_ * k_);
    ym.noalias() = wm * cols;
    for (int o = 0; o < out_; ++o) ym.row(o).array() += bias_.value[static_cast<std::size_t>(o)];
    if (cache) {
      cache->height = h;
      cache->width = w;
    }
    return y;
  }

  /// Accumulates parameter gradients; returns the input gradient when requested.
  Tensor<T> backward(const Tensor<T>& grad_out, const ConvCache<T>& cache, bool need_input_grad) {
    const int h = cache.height, w = cache.width;
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
    const Eigen::Index kk = static_cast<Eigen::Index>(in_) * k_ * k_;
    ConstMatrixMap<T> gy(grad_out.data(), out_, hw);
    MatrixMap<T> gw(weight_.grad.data(), out_, kk);
    gw.noalias() += gy * cache.columns.transpose();
    for (int o = 0; o < out_; ++o) bias_.grad[static_cast<std::size_t>(o)] += gy.row(o).sum();
    if (!need_input_grad) return {};
    ConstMatrixMap<T> wm(weight_.value.data(), out_, kk);
    RowMatrix<T> gcols = wm.transpose() * gy;
    return col2im(gcols, h, w);
  }

  std::vector<Parameter<T>*> parameters() { return {&weight_, &bias_}; }

private:
  void im2col(const Tensor<T>& x, RowMatrix<T>& cols) const {
    const int h = x.height(), w = x.width();
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
    if (k_ == 1) {
      cols = ConstMatrixMap<T>(x.data(), in_, hw);
      return;
    }
    cols.setZero(static_cast<Eigen::Index>(in_) * 9, hw);
    for (int c = 0; c < in_; ++c)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          T* row = cols.row((static_cast<Eigen::Index>(c) * 3 + ky) * 3 + kx).data();
          const int dy = ky - 1, dx = kx - 1;
          for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
            const T* src = &x(c, y + dy, 0);
            T* dst = row + static_cast<std::size_t>(y) * w;
            const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            for (int xx = x0; xx < x1; ++xx) dst[xx] = src[xx + dx];
          }
        }
  }

  Tensor<T> col2im(const RowMatrix<T>& cols, int h, int w) const {
    Tensor<T> g(in_, h, w);
    if (k_ == 1) {
      std::copy(cols.data(), cols.data() + cols.size(), g.data());
      return g;
    }
    for (int c = 0; c < in_; ++c)
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const T* row = cols.row((static_cast<Eigen::Index>(c) * 3 + ky) * 3 + kx).data();
          const int dy = ky - 1, dx = kx - 1;
          for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
            T* dst = &g(c, y + dy, 0);
            const T* src = row + static_cast<std::size_t>(y) * w;
            const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
            for (int xx = x0; xx < x1; ++xx) dst[xx + dx] += src[xx];
          }
        }
    return g;
  }

  int in_ = 0, out_ = 0, k_ = 1;
  Parameter<T> weight_;
  Parameter<T> bias_;
};

// ---------------------------------------------------------------------------

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (auto& v : x) v = v > T{} ? v : T{};
}

/// Gradient of relu given its output.
template <typename T>
void relu_backward_inplace(Tensor<T>& grad, const Tensor<T>& relu_out) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(relu_out[i] > T{})) grad[i] = T{};
}

template <typename T>
struct DoubleConvCache {
  ConvCache<T> first, second;
  Tensor<T> mid;  // relu(conv1(x))
  Tensor<T> out;  // relu(conv2(mid))
};

/// conv3x3 -> relu -> conv3x3 -> relu.
template <typename T>
class DoubleConv {
public:
  DoubleConv() = default;
  DoubleConv(const std::string& name, int in_channels, int out_channels)
      : first_(name + ".conv1", in_channels, out_channels, 3),
        second_(name + ".conv2", out_channels, out_channels, 3) {}

  void init(std::mt19937_64& rng) {
    first_.init(rng);
    second_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x, DoubleConvCache<T>* cache) const {
    Tensor<T> mid = first_.forward(x, cache ? &cache->first : nullptr);
    relu_inplace(mid);
    Tensor<T> out = second_.forward(mid, cache ? &cache->second : nullptr);
    relu_inplace(out);
    if (cache) {
      cache->mid = mid;
      cache->out = out;
    }
    return out;
  }

  Tensor<T> backward(Tensor<T> grad_out, const DoubleConvCache<T>& cache, bool need_input_grad) {
    relu_backward_inplace(grad_out, cache.out);
    Tensor<T> g = second_.backward(grad_out, cache.second, true);
    relu_backward_inplace(g, cache.mid);
    return first_.backward(g, cache.first, need_input_grad);
  }

  std::vector<Parameter<T>*> parameters() {
    auto p = first_.parameters();
    auto q = second_.parameters();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

private:
  Conv2d<T> first_, second_;
};

// ---------------------------------------------------------------------------

struct PoolCache {
  std::vector<std::uint32_t> argmax;  // flat input index per output element
  Shape input;
};

/// 2x2 max pooling, stride 2. Ties resolve to the first element in raster order.
template <typename T>
Tensor<T> maxpool2(const Tensor<T>& x, PoolCache* cache) {
  if (x.height() % 2 || x.width() % 2) throw ShapeError("maxpool2: odd spatial size " + x.shape().str());
  const int h = x.height() / 2, w = x.width() / 2;
  Tensor<T> y(x.channels(), h, w);
  if (cache) {
    cache->argmax.assign(y.size(), 0);
    cache->input = x.shape();
  }
  std::size_t o = 0;
  for (int c = 0; c < x.channels(); ++c)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx, ++o) {
        int by = 2 * yy, bx = 2 * xx;
        T best = x(c, by, bx);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            if (x(c, 2 * yy + dy, 2 * xx + dx) > best) {
              best = x(c, 2 * yy + dy, 2 * xx + dx);
              by = 2 * yy + dy;
              bx = 2 * xx + dx;
            }
        y[o] = best;
        if (cache)
          cache->argmax[o] = static_cast<std::uint32_t>((static_cast<std::size_t>(c) * x.height() + by) * x.width() + bx);
      }
  return y;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& grad_out, const PoolCache& cache) {
  Tensor<T> g(cache.input);
  for (std::size_t i = 0; i < grad_out.size(); ++i) g[cache.argmax[i]] += grad_out[i];
  return g;
}

template <typename T>
T sigmoid(T z) {
  return z >= T{} ? T{1} / (T{1} + std::exp(-z)) : std::exp(z) / (T{1} + std::exp(z));
}

}  // namespace litebound::nn

#endif  // LITEBOUND_NN_HPP
