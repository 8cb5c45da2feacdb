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

#ifndef LITEBOUND_IMAGE_IO_HPP
#define LITEBOUND_IMAGE_IO_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "litebound/error.hpp"
#include "litebound/tensor.hpp"

namespace litebound::io {

namespace detail {

inline cv::Mat read_raw(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw FormatError("cannot decode image " + path.string());
  return m;
}

inline double full_scale(const cv::Mat& m) {
  switch (m.depth()) {
    case CV_8U: return 255.0;
    case CV_16U: return 65535.0;
    case CV_32F:
    case CV_64F: return 1.0;
    default: throw FormatError("unsupported pixel depth");
  }
}

inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace detail

/// Reads an RGB (or grayscale, replicated) image scaled to [0,1].
inline Tensor<float> read_rgb(const std::filesystem::path& path) {
  cv::Mat m = detail::read_raw(path);
  const double scale = detail::full_scale(m);
  cv::Mat f;
  m.convertTo(f, CV_64F, 1.0 / scale);
  Tensor<float> out(3, f.rows, f.cols);
  const int ch = f.channels();
  for (int y = 0; y < f.rows; ++y) {
    const double* row = f.ptr<double>(y);
    for (int x = 0; x < f.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        // OpenCV stores BGR(A); gray images replicate.
        double v = ch >= 3 ? row[x * ch + (2 - c)] : row[x * ch];
        out(c, y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

/// Reads a single-channel intensity image scaled to [0,1]; colour inputs are averaged.
inline Tensor<float> read_gray(const std::filesystem::path& path) {
  cv::Mat m = detail::read_raw(path);
  const double scale = detail::full_scale(m);
  cv::Mat f;
  m.convertTo(f, CV_64F, 1.0 / scale);
  Tensor<float> out(1, f.rows, f.cols);
  const int ch = f.channels();
  const int used = std::min(ch, 3);
  for (int y = 0; y < f.rows; ++y) {
    const double* row = f.ptr<double>(y);
    for (int x = 0; x < f.cols; ++x) {
      double s = 0.0;
      for (int c = 0; c < used; ++c) s += row[x * ch + c];
      out(0, y, x) = static_cast<float>(s / used);
    }
  }
  return out;
}

template <typename T>
void write_png(const std::filesystem::path& path, const Tensor<T>& t) {
  if (t.channels() != 1 && t.channels() != 3)
    throw ShapeError("write_png: expected 1 or 3 channels, got " + std::to_string(t.channels()));
  cv::Mat m(t.height(), t.width(), t.channels() == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < t.height(); ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < t.width(); ++x) {
      if (t.channels() == 1) {
        row[x] = detail::to_u8(static_cast<double>(t(0, y, x)));
      } else {
        for (int c = 0; c < 3; ++c) row[x * 3 + (2 - c)] = detail::to_u8(static_cast<double>(t(c, y, x)));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), m)) throw Error("cannot write image " + path.string());
}

}  // namespace litebound::io

#endif  // LITEBOUND_IMAGE_IO_HPP
