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

#ifndef LITEBOUND_TENSOR_HPP
#define LITEBOUND_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "litebound/error.hpp"

namespace litebound {

/// Channels x height x width.
struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t numel() const noexcept {
    return static_cast<std::size_t>(channels) * height * width;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
  }
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << s.str(); }

/// Dense 3-D tensor stored channel-major (C, H, W).
///
/// Every feature map in the pipeline is one of these: images are 3-channel
/// tensors, masks are 1-channel tensors, latents are D-channel tensors.
template <typename T>
class Tensor {
public:
  using value_type = T;

  Tensor() = default;
  Tensor(int channels, int height, int width, T fill = T{})
      : shape_{channels, height, width}, data_(shape_.numel(), fill) {
    if (channels < 0 || height < 0 || width < 0) throw ShapeError("negative tensor dimension");
  }
  explicit Tensor(Shape s, T fill = T{}) : Tensor(s.channels, s.height, s.width, fill) {}

  const Shape& shape() const noexcept { return shape_; }
  int channels() const noexcept { return shape_.channels; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int c, int y, int x) noexcept {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  const T& operator()(int c, int y, int x) const noexcept {
    return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }
  std::span<T> channel(int c) noexcept {
    return std::span<T>(data_).subspan(static_cast<std::size_t>(c) * shape_.plane(), shape_.plane());
  }
  std::span<const T> channel(int c) const noexcept {
    return std::span<const T>(data_).subspan(static_cast<std::size_t>(c) * shape_.plane(),
                                             shape_.plane());
  }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  Tensor& operator+=(const Tensor& o) {
    require_same(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    require_same(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, T s) { return a *= s; }

  bool operator==(const Tensor&) const = default;

private:
  void require_same(const Tensor& o, const char* op) const {
    if (o.shape_ != shape_)
      throw ShapeError(std::string("tensor ") + op + ": " + shape_.str() + " vs " + o.shape_.str());
  }

  Shape shape_{};
  std::vector<T> data_;
};

template <typename T>
void require_shape(const Tensor<T>& t, const Shape& expected, const char* what) {
  if (t.shape() != expected)
    throw ShapeError(std::string(what) + ": expected " + expected.str() + ", got " + t.shape().str());
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template <typename T>
double sum_squares(const Tensor<T>& a) {
  double s = 0.0;
  for (T v : a) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("dot: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <typename T>
bool all_finite(const Tensor<T>& a) {
  return std::all_of(a.begin(), a.end(), [](T v) { return std::isfinite(static_cast<double>(v)); });
}

/// Concatenate along channels. All parts must share spatial size.
template <typename T>
Tensor<T> concat_channels(std::initializer_list<const Tensor<T>*> parts) {
  int c = 0, h = -1, w = -1;
  for (const auto* p : parts) {
    if (h < 0) {
      h = p->height();
      w = p->width();
    } else if (p->height() != h || p->width() != w) {
      throw ShapeError("concat_channels: spatial mismatch " + p->shape().str());
    }
    c += p->channels();
  }
  Tensor<T> out(c, std::max(h, 0), std::max(w, 0));
  auto it = out.begin();
  for (const auto* p : parts) it = std::copy(p->begin(), p->end(), it);
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.channels())
    throw ShapeError("slice_channels: range out of bounds");
  Tensor<T> out(count, t.height(), t.width());
  const auto plane = t.shape().plane();
  std::copy(t.begin() + first * plane, t.begin() + (first + count) * plane, out.begin());
  return out;
}

template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& t) {
  Tensor<T> out(t.shape());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out(c, y, x) = t(c, y, t.width() - 1 - x);
  return out;
}

template <typename T>
Tensor<T> flip_vertical(const Tensor<T>& t) {
  Tensor<T> out(t.shape());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out(c, y, x) = t(c, t.height() - 1 - y, x);
  return out;
}

template <typename T>
Tensor<T> rotate180(const Tensor<T>& t) {
  return flip_vertical(flip_horizontal(t));
}

}  // namespace litebound

#endif  // LITEBOUND_TENSOR_HPP
