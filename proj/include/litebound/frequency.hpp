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

#ifndef LITEBOUND_FREQUENCY_HPP
#define LITEBOUND_FREQUENCY_HPP

// Per-channel 2-D Fourier band splitting of feature maps.
//
// Conventions:
//   * unitary DFT: X[u,v] = (hw)^-1/2 sum_{y,x} x[y,x] exp(-2 pi i (k_u y / h + k_v x / w))
//   * centred spectrum: bin u holds frequency k_u = u - floor(h/2), so DC sits at (h/2, w/2)
//   * radial band rule: r(u,v) = sqrt((k_u/(h/2))^2 + (k_v/(w/2))^2) / sqrt(2), low iff r <= cutoff

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "litebound/error.hpp"
#include "litebound/tensor.hpp"

namespace litebound::freq {

using complex = std::complex<double>;

/// Centred, unitary per-channel spectrum of a C x H x W tensor.
struct Spectrum {
  Shape shape;
  std::vector<complex> coefficients;  // channel-major, same layout as Tensor

  complex& operator()(int c, int u, int v) {
    return coefficients[(static_cast<std::size_t>(c) * shape.height + u) * shape.width + v];
  }
  const complex& operator()(int c, int u, int v) const {
    return coefficients[(static_cast<std::size_t>(c) * shape.height + u) * shape.width + v];
  }
};

/// Complementary binary masks over the centred H x W frequency grid.
struct BandMasks {
  int height = 0;
  int width = 0;
  double cutoff_ratio = 0.25;
  std::vector<std::uint8_t> low;
  std::vector<std::uint8_t> high;

  bool low_at(int u, int v) const { return low[static_cast<std::size_t>(u) * width + v] != 0; }
  bool high_at(int u, int v) const { return high[static_cast<std::size_t>(u) * width + v] != 0; }
};

/// Low- and high-frequency spatial reconstructions.
template <typename T>
struct FrequencyBands {
  Tensor<T> low_spatial;
  Tensor<T> high_spatial;
};

inline constexpr double kDefaultCutoff = 0.25;
inline constexpr double kImagResidueLimit = 1e-4;

inline int centred_frequency(int index, int n) { return index - n / 2; }

inline double normalized_radius(int u, int v, int h, int w) {
  const double ku = centred_frequency(u, h) / (h / 2.0);
  const double kv = centred_frequency(v, w) / (w / 2.0);
  return std::sqrt(ku * ku + kv * kv) / std::numbers::sqrt2;
}

namespace detail {

// Centred unitary DFT matrix F[u][y] of size n.
inline std::vector<complex> dft_matrix(int n) {
  std::vector<complex> m(static_cast<std::size_t>(n) * n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int u = 0; u < n; ++u) {
    const int k = centred_frequency(u, n);
    for (int y = 0; y < n; ++y) {
      // Reduce k*y mod n before the trig call to keep the phase exact-ish for large n.
      const long long kn = ((static_cast<long long>(k) * y) % n + n) % n;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(kn) / n;
      m[static_cast<std::size_t>(u) * n + y] = std::polar(norm, angle);
    }
  }
  return m;
}

// Conjugate transpose; the inverse of a unitary matrix.
inline std::vector<complex> adjoint(const std::vector<complex>& m, int n) {
  std::vector<complex> a(m.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(j) * n + i] = std::conj(m[static_cast<std::size_t>(i) * n + j]);
  return a;
}

// out[c] = A * in[c] * B^T with A (h x h), B (w x w), generic complex planes.
inline std::vector<complex> separable_apply(const std::vector<complex>& in, const Shape& s,
                                            const std::vector<complex>& a, const std::vector<complex>& b) {
  const int h = s.height, w = s.width;
  std::vector<complex> tmp(in.size()), out(in.size());
  for (int c = 0; c < s.channels; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * s.plane();
    // rows: tmp[y][v] = sum_x in[y][x] * B[v][x]
    for (int y = 0; y < h; ++y)
      for (int v = 0; v < w; ++v) {
        complex acc{};
        for (int x = 0; x < w; ++x)
          acc += in[off + static_cast<std::size_t>(y) * w + x] * b[static_cast<std::size_t>(v) * w + x];
        tmp[off + static_cast<std::size_t>(y) * w + v] = acc;
      }
    // columns: out[u][v] = sum_y A[u][y] * tmp[y][v]
    for (int u = 0; u < h; ++u)
      for (int v = 0; v < w; ++v) {
        complex acc{};
        for (int y = 0; y < h; ++y)
          acc += a[static_cast<std::size_t>(u) * h + y] * tmp[off + static_cast<std::size_t>(y) * w + v];
        out[off + static_cast<std::size_t>(u) * w + v] = acc;
      }
  }
  return out;
}

}  // namespace detail

/// Forward centred unitary DFT of every channel.
template <typename T>
Spectrum dft2(const Tensor<T>& features) {
  if (features.height() < 2 || features.width() < 2)
    throw ShapeError("dft2: spatial dims must be >= 2, got " + features.shape().str());
  if (!all_finite(features)) throw NumericError("dft2: non-finite input");
  std::vector<complex> in(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) in[i] = static_cast<double>(features[i]);
  Spectrum s{features.shape(), {}};
  s.coefficients = detail::separable_apply(in, s.shape, detail::dft_matrix(features.height()),
                                           detail::dft_matrix(features.width()));
  return s;
}

/// Inverse of dft2, complex-valued.
inline std::vector<complex> idft2_complex(const Spectrum& s) {
  const int h = s.shape.height, w = s.shape.width;
  return detail::separable_apply(s.coefficients, s.shape, detail::adjoint(detail::dft_matrix(h), h),
                                 detail::adjoint(detail::dft_matrix(w), w));
}

/// Inverse of dft2; the imaginary part is dropped.
template <typename T = double>
Tensor<T> idft2(const Spectrum& s) {
  const auto c = idft2_complex(s);
  Tensor<T> out(s.shape);
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = static_cast<T>(c[i].real());
  return out;
}

inline BandMasks make_masks(int height, int width, double cutoff_ratio = kDefaultCutoff) {
  if (!(cutoff_ratio > 0.0 && cutoff_ratio < 1.0))
    throw ConfigError("cutoff_ratio must lie in (0,1), got " + std::to_string(cutoff_ratio));
  if (height < 1 || width < 1) throw ShapeError("make_masks: dimensions must be positive");
  BandMasks m{height, width, cutoff_ratio, {}, {}};
  m.low.resize(static_cast<std::size_t>(height) * width);
  m.high.resize(m.low.size());
  for (int u = 0; u < height; ++u)
    for (int v = 0; v < width; ++v) {
      const bool is_low = normalized_radius(u, v, height, width) <= cutoff_ratio;
      m.low[static_cast<std::size_t>(u) * width + v] = is_low ? 1 : 0;
      m.high[static_cast<std::size_t>(u) * width + v] = is_low ? 0 : 1;
    }
  return m;
}

/// Spatial reconstruction of one band: Re(IDFT(mask * DFT(x))).
///
/// The operator is a real orthogonal projection, hence self-adjoint; it also
/// serves as its own backward pass.
template <typename T>
Tensor<T> band_project(const Tensor<T>& features, const std::vector<std::uint8_t>& mask, int mask_h,
                       int mask_w) {
  if (features.height() != mask_h || features.width() != mask_w)
    throw ShapeError("band mask " + std::to_string(mask_h) + "x" + std::to_string(mask_w) +
                     " does not match features " + features.shape().str());
  Spectrum s = dft2(features);
  const std::size_t plane = s.shape.plane();
  for (int c = 0; c < s.shape.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      if (!mask[i]) s.coefficients[static_cast<std::size_t>(c) * plane + i] = 0.0;
  const auto back = idft2_complex(s);
  Tensor<T> out(features.shape());
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (std::abs(back[i].imag()) > kImagResidueLimit)
      throw NumericError("band_project: imaginary residue " + std::to_string(back[i].imag()) +
                         " (asymmetric mask?)");
    out[i] = static_cast<T>(back[i].real());
  }
  return out;
}

template <typename T>
FrequencyBands<T> split_bands(const Tensor<T>& features, const BandMasks& masks) {
  return {band_project(features, masks.low, masks.height, masks.width),
          band_project(features, masks.high, masks.height, masks.width)};
}

/// Gradient of a scalar loss w.r.t. the split_bands input, given gradients
/// w.r.t. both band outputs.
template <typename T>
Tensor<T> split_bands_backward(const Tensor<T>& grad_low, const Tensor<T>& grad_high, const BandMasks& masks) {
  return band_project(grad_low, masks.low, masks.height, masks.width) +
         band_project(grad_high, masks.high, masks.height, masks.width);
}

}  // namespace litebound::freq

#endif  // LITEBOUND_FREQUENCY_HPP
