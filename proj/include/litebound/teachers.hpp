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

#ifndef LITEBOUND_TEACHERS_HPP
#define LITEBOUND_TEACHERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <openssl/evp.h>

#include "litebound/data.hpp"
#include "litebound/error.hpp"
#include "litebound/nn.hpp"
#include "litebound/resample.hpp"
#include "litebound/tensor.hpp"

namespace litebound::teach {

/// A frozen feature extractor: RGB image (3 x H x W, [0,1]) -> C x H_i x W_i.
class Teacher {
public:
  virtual ~Teacher() = default;
  virtual std::string id() const = 0;
  virtual int channels() const = 0;
  /// Everything that determines the teacher's output; hashed into the bank fingerprint.
  virtual std::string descriptor() const = 0;
  virtual Tensor<double> extract(const Tensor<float>& image) const = 0;
};

/// Adapts any callable image -> tensor.
class FunctionTeacher final : public Teacher {
public:
  using Fn = std::function<Tensor<double>(const Tensor<float>&)>;
  FunctionTeacher(std::string id, int channels, Fn fn, std::string descriptor = {})
      : id_(std::move(id)), channels_(channels), fn_(std::move(fn)),
        descriptor_(descriptor.empty() ? "function:" + id_ : std::move(descriptor)) {}
  std::string id() const override { return id_; }
  int channels() const override { return channels_; }
  std::string descriptor() const override { return descriptor_; }
  Tensor<double> extract(const Tensor<float>& image) const override { return fn_(image); }

private:
  std::string id_;
  int channels_;
  Fn fn_;
  std::string descriptor_;
};

// ---------------------------------------------------------------------------
// Mock bank

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double s = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    s += k[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : k) v /= s;
  return k;
}

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

/// Separable Gaussian blur with symmetric (edge-repeating) borders.
inline Tensor<double> blur(const Tensor<double>& x, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Tensor<double> tmp(x.shape()), out(x.shape());
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * x(c, y, reflect(xx + i, x.width()));
        tmp(c, y, xx) = s;
      }
    for (int y = 0; y < x.height(); ++y)
      for (int xx = 0; xx < x.width(); ++xx) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp(c, reflect(y + i, x.height()), xx);
        out(c, y, xx) = s;
      }
  }
  return out;
}

inline Tensor<double> gray(const Tensor<float>& image) {
  Tensor<double> g(1, image.height(), image.width());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      g(0, y, x) = (static_cast<double>(image(0, y, x)) + image(1, y, x) + image(2, y, x)) / 3.0;
  return g;
}

inline int quarter(int n) { return std::max(1, n / 4); }

}  // namespace detail

/// Multi-scale Gaussian blur of the RGB image (semantic proxy), at 1/4 resolution.
class GaussianPyramidTeacher final : public Teacher {
public:
  std::string id() const override { return "gaussian_pyramid"; }
  int channels() const override { return 3 * static_cast<int>(sigmas_.size()); }
  std::string descriptor() const override { return "gaussian_pyramid:v1:sigmas=1,2,4,8"; }
  Tensor<double> extract(const Tensor<float>& image) const override {
    const Tensor<double> rgb = image.cast<double>();
    const int h = detail::quarter(image.height()), w = detail::quarter(image.width());
    Tensor<double> out(channels(), h, w);
    int c = 0;
    for (double s : sigmas_) {
      const Tensor<double> small = resize_bilinear(detail::blur(rgb, s), h, w);
      std::copy(small.begin(), small.end(), out.channel(c).begin());
      c += 3;
    }
    return out;
  }

private:
  std::array<double, 4> sigmas_{1.0, 2.0, 4.0, 8.0};
};

/// Rectified oriented gradient responses at two scales (boundary proxy), 1/4 resolution.
class EdgeBankTeacher final : public Teacher {
public:
  static constexpr int kOrientations = 8;
  std::string id() const override { return "edge_bank"; }
  int channels() const override { return 2 * kOrientations; }
  std::string descriptor() const override { return "edge_bank:v1:sobel,orient=8,sigmas=1,2.5,pool_sigma=2"; }
  Tensor<double> extract(const Tensor<float>& image) const override {
    const Tensor<double> g = detail::gray(image);
    const int h = detail::quarter(image.height()), w = detail::quarter(image.width());
    Tensor<double> responses(channels(), image.height(), image.width());
    int c = 0;
    for (double sigma : {1.0, 2.5}) {
      const Tensor<double> b = detail::blur(g, sigma);
      for (int k = 0; k < kOrientations; ++k, ++c) {
        const double theta = std::numbers::pi * k / kOrientations;
        const double ct = std::cos(theta), st = std::sin(theta);
        for (int y = 0; y < b.height(); ++y)
          for (int x = 0; x < b.width(); ++x) {
            auto px = [&](int dy, int dx) {
              return b(0, detail::reflect(y + dy, b.height()), detail::reflect(x + dx, b.width()));
            };
            const double gx = (px(-1, 1) + 2 * px(0, 1) + px(1, 1)) - (px(-1, -1) + 2 * px(0, -1) + px(1, -1));
            const double gy = (px(1, -1) + 2 * px(1, 0) + px(1, 1)) - (px(-1, -1) + 2 * px(-1, 0) + px(-1, 1));
            responses(c, y, x) = std::abs(ct * gx + st * gy);
          }
      }
    }
    return resize_bilinear(detail::blur(responses, 2.0), h, w);
  }
};

/// Frozen random two-stage conv stack (generic proxy): conv-relu-pool twice, 1/4 resolution.
class RandomConvTeacher final : public Teacher {
public:
  explicit RandomConvTeacher(std::uint64_t seed = 11, int width = 16)
      : seed_(seed), width_(width), first_("random_conv.c1", 3, width, 3), second_("random_conv.c2", width, width, 3) {
    std::mt19937_64 rng(seed);
    first_.init(rng);
    second_.init(rng);
  }
  std::string id() const override { return "random_conv"; }
  int channels() const override { return width_; }
  std::string descriptor() const override {
    return "random_conv:v1:seed=" + std::to_string(seed_) + ",width=" + std::to_string(width_);
  }
  Tensor<double> extract(const Tensor<float>& image) const override {
    Tensor<double> x = image.cast<double>();
    const int h = 4 * detail::quarter(image.height()), w = 4 * detail::quarter(image.width());
    x = resize_bilinear(x, h, w);
    x = first_.forward(x, nullptr);
    nn::relu_inplace(x);
    x = nn::maxpool2(x, nullptr);
    x = second_.forward(x, nullptr);
    nn::relu_inplace(x);
    return nn::maxpool2(x, nullptr);
  }

private:
  std::uint64_t seed_;
  int width_;
  nn::Conv2d<double> first_, second_;
};

// ---------------------------------------------------------------------------

using Fingerprint = std::array<std::uint8_t, 32>;

inline Fingerprint sha256(const std::string& bytes) {
  Fingerprint out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw Error("SHA-256 digest failed");
  return out;
}

inline std::string to_hex(const Fingerprint& fp) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : fp) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

/// Teachers in lexicographic id order; that order fixes the channel layout.
class TeacherBank {
public:
  TeacherBank() = default;
  explicit TeacherBank(std::vector<std::shared_ptr<const Teacher>> teachers) : teachers_(std::move(teachers)) {
    std::stable_sort(teachers_.begin(), teachers_.end(), [](const auto& a, const auto& b) { return a->id() < b->id(); });
    for (std::size_t i = 1; i < teachers_.size(); ++i)
      if (teachers_[i]->id() == teachers_[i - 1]->id()) throw ConfigError("duplicate teacher id " + teachers_[i]->id());
  }

  const std::vector<std::shared_ptr<const Teacher>>& teachers() const noexcept { return teachers_; }
  bool empty() const noexcept { return teachers_.empty(); }
  int total_channels() const {
    int c = 0;
    for (const auto& t : teachers_) c += t->channels();
    return c;
  }

  Fingerprint fingerprint() const {
    std::string material = "litebound-teacher-bank/v1\n";
    for (const auto& t : teachers_) material += t->descriptor() + "\n";
    return sha256(material);
  }

private:
  std::vector<std::shared_ptr<const Teacher>> teachers_;
};

inline std::vector<std::string> mock_teacher_ids() { return {"edge_bank", "gaussian_pyramid", "random_conv"}; }

inline std::shared_ptr<const Teacher> make_mock_teacher(const std::string& id, std::uint64_t seed = 11) {
  if (id == "gaussian_pyramid") return std::make_shared<GaussianPyramidTeacher>();
  if (id == "edge_bank") return std::make_shared<EdgeBankTeacher>();
  if (id == "random_conv") return std::make_shared<RandomConvTeacher>(seed);
  throw ConfigError("unknown teacher '" + id + "'");
}

inline TeacherBank make_mock_bank(const std::vector<std::string>& ids = mock_teacher_ids(), std::uint64_t seed = 11) {
  std::vector<std::shared_ptr<const Teacher>> t;
  for (const auto& id : ids) t.push_back(make_mock_teacher(id, seed));
  return TeacherBank(std::move(t));
}

// ---------------------------------------------------------------------------

struct AggregatedFeatures {
  Tensor<double> features;                                  // C_total x H' x W'
  std::vector<std::pair<std::string, int>> component_channels;  // (teacher_id, C_i) in layout order
};

struct BoundaryFeatures {
  Tensor<double> features;
};

/// Runs every teacher, resizes to H' x W' bilinearly and concatenates along channels.
inline AggregatedFeatures extract_semantic(const TeacherBank& bank, const Tensor<float>& image, int out_h, int out_w) {
  if (bank.empty()) throw ConfigError("teacher bank is empty");
  AggregatedFeatures agg;
  agg.features = Tensor<double>(bank.total_channels(), out_h, out_w);
  int offset = 0;
  for (const auto& t : bank.teachers()) {
    Tensor<double> f;
    try {
      f = t->extract(image);
    } catch (const std::exception& e) {
      throw TeacherError(t->id(), e.what());
    }
    if (f.channels() != t->channels() || f.height() <= 0 || f.width() <= 0)
      throw TeacherError(t->id(), "produced " + f.shape().str() + ", expected " + std::to_string(t->channels()) + " channels");
    if (!all_finite(f)) throw TeacherError(t->id(), "non-finite features");
    const Tensor<double> r = resize_bilinear(f, out_h, out_w);
    std::copy(r.begin(), r.end(), agg.features.channel(offset).begin());
    agg.component_channels.emplace_back(t->id(), t->channels());
    offset += t->channels();
  }
  return agg;
}

struct AttentionResult {
  Tensor<double> output;
  std::vector<double> weights;  // N x N, row-major, rows are query tokens
};

/// Single-head scaled dot-product attention over spatial tokens:
/// Q = V = f_nonpolyp, K = f_polyp, scale 1/sqrt(C).
inline AttentionResult cross_attention_weights(const Tensor<double>& f_polyp, const Tensor<double>& f_nonpolyp) {
  if (f_polyp.shape() != f_nonpolyp.shape())
    throw ShapeError("cross_attention: key " + f_polyp.shape().str() + " vs query/value " + f_nonpolyp.shape().str());
  const int c = f_polyp.channels();
  const Eigen::Index n = static_cast<Eigen::Index>(f_polyp.shape().plane());
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  // Tensor layout is channel-major, i.e. each map is a C x N matrix.
  Eigen::Map<const Mat> key(f_polyp.data(), c, n);
  Eigen::Map<const Mat> qv(f_nonpolyp.data(), c, n);
  Mat scores = (qv.transpose() * key) / std::sqrt(static_cast<double>(c));  // N x N
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - m).exp();
    scores.row(i) /= scores.row(i).sum();
  }
  AttentionResult r;
  r.output = Tensor<double>(f_polyp.shape());
  Eigen::Map<Mat> out(r.output.data(), c, n);
  out.noalias() = qv * scores.transpose();
  r.weights.assign(scores.data(), scores.data() + scores.size());
  return r;
}

inline Tensor<double> cross_attention(const Tensor<double>& f_polyp, const Tensor<double>& f_nonpolyp) {
  return cross_attention_weights(f_polyp, f_nonpolyp).output;
}

/// Boundary-aware features: teacher features of both mask-isolated halves, fused by cross-attention.
inline BoundaryFeatures extract_boundary(const TeacherBank& bank, const ImageSample& sample, int out_h, int out_w) {
  const RegionPair halves = region_split(sample);
  const auto f_polyp = extract_semantic(bank, halves.polyp_input, out_h, out_w);
  const auto f_nonpolyp = extract_semantic(bank, halves.nonpolyp_input, out_h, out_w);
  return {cross_attention(f_polyp.features, f_nonpolyp.features)};
}

// ---------------------------------------------------------------------------

/// Frozen linear map C -> D with orthonormal columns (D >= C) or rows (D < C).
/// Seed 0 is the canonical coordinate embedding, the identity when D == C.
inline Eigen::MatrixXd make_projection(int in_channels, int out_channels, std::uint64_t seed) {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("projection widths must be >= 1");
  const int tall = std::max(in_channels, out_channels), narrow = std::min(in_channels, out_channels);
  Eigen::MatrixXd q;
  if (seed == 0) {
    q = Eigen::MatrixXd::Identity(tall, narrow);
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd g(tall, narrow);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = n(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, narrow);
    // Fix column signs so the factorisation is unique.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < narrow; ++j)
      if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  // D x C
  return out_channels >= in_channels ? q : Eigen::MatrixXd(q.transpose());
}

inline Tensor<double> project_channels(const Tensor<double>& x, const Eigen::MatrixXd& p) {
  if (p.cols() != x.channels()) throw ShapeError("projection expects " + std::to_string(p.cols()) + " channels");
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index n = static_cast<Eigen::Index>(x.shape().plane());
  Tensor<double> out(static_cast<int>(p.rows()), x.height(), x.width());
  Eigen::Map<Mat>(out.data(), p.rows(), n).noalias() = p * Eigen::Map<const Mat>(x.data(), x.channels(), n);
  return out;
}

/// Teacher-side distillation targets at width D.
struct DistillTarget {
  Tensor<float> semantic;  // D x H' x W'
  Tensor<float> boundary;  // D x H' x W'
  std::uint64_t projection_seed = 0;
};

inline DistillTarget project_targets(const AggregatedFeatures& semantic, const BoundaryFeatures& boundary, int width,
                                     std::uint64_t seed) {
  if (width < 1) throw ConfigError("distillation width must be >= 1");
  if (semantic.features.shape() != boundary.features.shape())
    throw ShapeError("project_targets: semantic/boundary shape mismatch");
  const auto p = make_projection(semantic.features.channels(), width, seed);
  return {project_channels(semantic.features, p).cast<float>(), project_channels(boundary.features, p).cast<float>(),
          seed};
}

// ---------------------------------------------------------------------------
// Feature cache: magic "LBFT", u16 version, u32 H', W', D, u64 projection seed,
// 32-byte teacher fingerprint, then semantic and boundary float32 payloads in
// row-major H' x W' x D order. All little-endian.

inline constexpr std::uint16_t kCacheVersion = 1;
inline constexpr std::size_t kCacheHeaderBytes = 4 + 2 + 3 * 4 + 8 + 32;
inline constexpr const char* kCacheExtension = ".lbft";

struct CacheHeader {
  std::uint32_t height = 0, width = 0, depth = 0;
  std::uint64_t projection_seed = 0;
  Fingerprint fingerprint{};
};

namespace detail {

template <typename U>
void put_le(std::string& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const std::string& buf, std::size_t& off) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
  off += sizeof(U);
  return static_cast<U>(v);
}

inline void put_payload(std::string& buf, const Tensor<float>& t) {
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      for (int c = 0; c < t.channels(); ++c) {
        std::uint32_t bits;
        const float v = t(c, y, x);
        std::memcpy(&bits, &v, 4);
        put_le<std::uint32_t>(buf, bits);
      }
}

inline Tensor<float> get_payload(const std::string& buf, std::size_t& off, const CacheHeader& h) {
  Tensor<float> t(static_cast<int>(h.depth), static_cast<int>(h.height), static_cast<int>(h.width));
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      for (int c = 0; c < t.channels(); ++c) {
        const auto bits = get_le<std::uint32_t>(buf, off);
        float v;
        std::memcpy(&v, &bits, 4);
        t(c, y, x) = v;
      }
  return t;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open cache file " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::filesystem::path cache_path(const std::filesystem::path& dir, const std::string& sample_id) {
  return dir / (sample_id + kCacheExtension);
}

inline void cache_write(const std::filesystem::path& dir, const std::string& sample_id, const DistillTarget& target,
                        const Fingerprint& fingerprint) {
  if (target.semantic.shape() != target.boundary.shape()) throw ShapeError("cache_write: semantic/boundary mismatch");
  std::string buf;
  buf.reserve(kCacheHeaderBytes + 2 * 4 * target.semantic.size());
  buf.append("LBFT", 4);
  detail::put_le<std::uint16_t>(buf, kCacheVersion);
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(target.semantic.height()));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(target.semantic.width()));
  detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(target.semantic.channels()));
  detail::put_le<std::uint64_t>(buf, target.projection_seed);
  buf.append(reinterpret_cast<const char*>(fingerprint.data()), fingerprint.size());
  detail::put_payload(buf, target.semantic);
  detail::put_payload(buf, target.boundary);
  std::filesystem::create_directories(dir);
  const auto path = cache_path(dir, sample_id);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os.write(buf.data(), static_cast<std::streamsize>(buf.size()))) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Parses and validates the header only.
inline CacheHeader cache_read_header(const std::filesystem::path& path, std::string* contents = nullptr) {
  std::string buf = detail::read_file(path);
  if (buf.size() < kCacheHeaderBytes || buf.compare(0, 4, "LBFT") != 0)
    throw FormatError("bad cache header in " + path.string());
  std::size_t off = 4;
  if (detail::get_le<std::uint16_t>(buf, off) != kCacheVersion)
    throw FormatError("unsupported cache version in " + path.string());
  CacheHeader h;
  h.height = detail::get_le<std::uint32_t>(buf, off);
  h.width = detail::get_le<std::uint32_t>(buf, off);
  h.depth = detail::get_le<std::uint32_t>(buf, off);
  h.projection_seed = detail::get_le<std::uint64_t>(buf, off);
  std::memcpy(h.fingerprint.data(), buf.data() + off, h.fingerprint.size());
  const std::uint64_t payload = 2ull * 4ull * h.height * h.width * h.depth;
  if (h.height == 0 || h.width == 0 || h.depth == 0 || buf.size() != kCacheHeaderBytes + payload)
    throw FormatError("cache header shape " + std::to_string(h.height) + "x" + std::to_string(h.width) + "x" +
                      std::to_string(h.depth) + " disagrees with payload size in " + path.string());
  if (contents) *contents = std::move(buf);
  return h;
}

/// Reads a cache entry, rejecting entries produced by another teacher bank.
inline DistillTarget cache_read(const std::filesystem::path& dir, const std::string& sample_id,
                                const Fingerprint& expected_fingerprint) {
  const auto path = cache_path(dir, sample_id);
  std::string buf;
  const CacheHeader h = cache_read_header(path, &buf);
  if (h.fingerprint != expected_fingerprint)
    throw StaleCacheError("cache entry " + path.string() + " was produced by teacher bank " + to_hex(h.fingerprint) +
                          ", expected " + to_hex(expected_fingerprint));
  std::size_t off = kCacheHeaderBytes;
  DistillTarget t;
  t.semantic = detail::get_payload(buf, off, h);
  t.boundary = detail::get_payload(buf, off, h);
  t.projection_seed = h.projection_seed;
  return t;
}

}  // namespace litebound::teach

#endif  // LITEBOUND_TEACHERS_HPP
