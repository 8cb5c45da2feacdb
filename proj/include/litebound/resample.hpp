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

#ifndef LITEBOUND_RESAMPLE_HPP
#define LITEBOUND_RESAMPLE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "litebound/tensor.hpp"

namespace litebound {

namespace detail {

struct AxisTap {
  int lo;
  int hi;
  double w_lo;
  double w_hi;
};

// Half-pixel-centre sampling: src = (dst + 0.5) * in/out - 0.5, clamped to the grid.
inline std::vector<AxisTap> bilinear_taps(int in, int out) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = std::max(0.0, (i + 0.5) * scale - 0.5);
    int lo = std::min(static_cast<int>(std::floor(src)), in - 1);
    int hi = std::min(lo + 1, in - 1);
    double frac = src - lo;
    taps[static_cast<std::size_t>(i)] = {lo, hi, 1.0 - frac, frac};
  }
  return taps;
}

}  // namespace detail

/// Bilinear resampling operator with its adjoint; reusable across channels and calls.
class BilinearResize {
public:
  BilinearResize(int in_h, int in_w, int out_h, int out_w)
      : in_h_(in_h), in_w_(in_w), out_h_(out_h), out_w_(out_w),
        ty_(detail::bilinear_taps(in_h, out_h)), tx_(detail::bilinear_taps(in_w, out_w)) {
    if (in_h <= 0 || in_w <= 0 || out_h <= 0 || out_w <= 0)
      throw ShapeError("BilinearResize: dimensions must be positive");
  }

  template <typename T>
  Tensor<T> forward(const Tensor<T>& in) const {
    if (in.height() != in_h_ || in.width() != in_w_) throw ShapeError("BilinearResize: input size");
    Tensor<T> out(in.channels(), out_h_, out_w_);
    for (int c = 0; c < in.channels(); ++c)
      for (int y = 0; y < out_h_; ++y) {
        const auto& ay = ty_[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w_; ++x) {
          const auto& ax = tx_[static_cast<std::size_t>(x)];
          double v = ay.w_lo * (ax.w_lo * in(c, ay.lo, ax.lo) + ax.w_hi * in(c, ay.lo, ax.hi)) +
                     ay.w_hi * (ax.w_lo * in(c, ay.hi, ax.lo) + ax.w_hi * in(c, ay.hi, ax.hi));
          out(c, y, x) = static_cast<T>(v);
        }
      }
    return out;
  }

  /// Adjoint: scatters output gradients back onto the input grid.
  template <typename T>
  Tensor<T> backward(const Tensor<T>& grad_out) const {
    if (grad_out.height() != out_h_ || grad_out.width() != out_w_)
      throw ShapeError("BilinearResize: gradient size");
    Tensor<T> g(grad_out.channels(), in_h_, in_w_);
    for (int c = 0; c < grad_out.channels(); ++c)
      for (int y = 0; y < out_h_; ++y) {
        const auto& ay = ty_[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w_; ++x) {
          const auto& ax = tx_[static_cast<std::size_t>(x)];
          const T go = grad_out(c, y, x);
          g(c, ay.lo, ax.lo) += static_cast<T>(ay.w_lo * ax.w_lo) * go;
          g(c, ay.lo, ax.hi) += static_cast<T>(ay.w_lo * ax.w_hi) * go;
          g(c, ay.hi, ax.lo) += static_cast<T>(ay.w_hi * ax.w_lo) * go;
          g(c, ay.hi, ax.hi) += static_cast<T>(ay.w_hi * ax.w_hi) * go;
        }
      }
    return g;
  }

private:
  int in_h_, in_w_, out_h_, out_w_;
  std::vector<detail::AxisTap> ty_, tx_;
};

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& in, int out_h, int out_w) {
  if (in.height() == out_h && in.width() == out_w) return in;
  return BilinearResize(in.height(), in.width(), out_h, out_w).forward(in);
}

/// Nearest-neighbour resampling using the same half-pixel centre convention.
template <typename T>
Tensor<T> resize_nearest(const Tensor<T>& in, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw ShapeError("resize_nearest: dimensions must be positive");
  Tensor<T> out(in.channels(), out_h, out_w);
  auto src = [](int i, int n_in, int n_out) {
    int s = static_cast<int>(std::floor((i + 0.5) * n_in / static_cast<double>(n_out)));
    return std::clamp(s, 0, n_in - 1);
  };
  for (int y = 0; y < out_h; ++y) {
    const int sy = src(y, in.height(), out_h);
    for (int x = 0; x < out_w; ++x) {
      const int sx = src(x, in.width(), out_w);
      for (int c = 0; c < in.channels(); ++c) out(c, y, x) = in(c, sy, sx);
    }
  }
  return out;
}

}  // namespace litebound

#endif  // LITEBOUND_RESAMPLE_HPP
