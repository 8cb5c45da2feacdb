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

#ifndef LITEBOUND_DATA_HPP
#define LITEBOUND_DATA_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "litebound/error.hpp"
#include "litebound/image_io.hpp"
#include "litebound/log.hpp"
#include "litebound/resample.hpp"
#include "litebound/tensor.hpp"

namespace litebound {

enum class SampleSource { disk, synthetic };
enum class Split { train, test };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

/// An RGB image in [0,1] (3 x H x W) with its binary mask (1 x H x W).
struct ImageSample {
  std::string id;
  Tensor<float> image;
  Tensor<float> mask;
  SampleSource source = SampleSource::disk;

  int height() const { return image.height(); }
  int width() const { return image.width(); }
};

inline bool is_binary(const Tensor<float>& m) {
  return std::all_of(m.begin(), m.end(), [](float v) { return v == 0.0f || v == 1.0f; });
}

/// Throws ShapeError when the sample breaks the image/mask contract.
inline void validate(const ImageSample& s) {
  if (s.image.channels() != 3) throw ShapeError("sample " + s.id + ": image must have 3 channels");
  if (s.mask.channels() != 1) throw ShapeError("sample " + s.id + ": mask must have 1 channel");
  if (s.image.height() != s.mask.height() || s.image.width() != s.mask.width())
    throw ShapeError("sample " + s.id + ": image " + s.image.shape().str() + " vs mask " +
                     s.mask.shape().str());
  if (!is_binary(s.mask)) throw ShapeError("sample " + s.id + ": mask is not binary");
}

inline Tensor<float> binarize(const Tensor<float>& m, float threshold = 0.5f) {
  Tensor<float> out(m.shape());
  std::transform(m.begin(), m.end(), out.begin(), [threshold](float v) { return v >= threshold ? 1.0f : 0.0f; });
  return out;
}

// ---------------------------------------------------------------------------
// Region split

struct RegionPair {
  Tensor<float> polyp_input;
  Tensor<float> nonpolyp_input;
};

/// Masks the image into foreground-only and background-only inputs.
inline RegionPair region_split(const ImageSample& s) {
  if (!is_binary(s.mask)) throw ShapeError("region_split: mask must be binary");
  RegionPair r{Tensor<float>(s.image.shape()), Tensor<float>(s.image.shape())};
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < s.height(); ++y)
      for (int x = 0; x < s.width(); ++x) {
        const float m = s.mask(0, y, x);
        const float v = s.image(c, y, x);
        // m is exactly 0 or 1, so the two halves sum back to v without rounding.
        r.polyp_input(c, y, x) = m * v;
        r.nonpolyp_input(c, y, x) = (1.0f - m) * v;
      }
  return r;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthSpec {
  int count = 200;
  int canvas = 128;
  int blob_min = 1;
  int blob_max = 3;
  double boundary_noise = 2.0;
  double contrast = 0.35;
  std::uint64_t seed = 0;
  std::string id_prefix = "synth";

  void validate() const {
    if (count <= 0) throw ConfigError("synth: count must be positive");
    if (canvas < 64) throw ConfigError("synth: canvas must be >= 64 (four 2x downsamplings)");
    if (blob_min < 1 || blob_max < blob_min) throw ConfigError("synth: invalid blob_count_range");
    if (!(boundary_noise >= 0.0)) throw ConfigError("synth: boundary_noise must be >= 0");
    if (!(contrast > 0.0 && contrast <= 1.0)) throw ConfigError("synth: contrast must lie in (0,1]");
  }
};

inline void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = {{"count", s.count},
       {"canvas", s.canvas},
       {"blob_count_range", {s.blob_min, s.blob_max}},
       {"boundary_noise", s.boundary_noise},
       {"contrast", s.contrast},
       {"seed", s.seed},
       {"id_prefix", s.id_prefix}};
}

/// One perturbed ellipse. Radius along direction phi (blob frame) is
/// the ellipse radius plus sum_k amp[k] * cos((k+3) phi + phase[k]).
struct Blob {
  double cx = 0, cy = 0;
  double semi_a = 1, semi_b = 1;
  double rotation = 0;
  std::array<double, 5> amp{};
  std::array<double, 5> phase{};

  /// Signed distance-like margin in pixels: positive inside.
  double margin(double px, double py) const {
    const double dx = px - cx, dy = py - cy;
    const double c = std::cos(rotation), s = std::sin(rotation);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    const double rho = std::hypot(u, v);
    if (rho == 0.0) return std::min(semi_a, semi_b);
    const double phi = std::atan2(v, u);
    const double ca = semi_b * std::cos(phi), sb = semi_a * std::sin(phi);
    double radius = semi_a * semi_b / std::sqrt(ca * ca + sb * sb);
    for (std::size_t k = 0; k < amp.size(); ++k)
      radius += amp[k] * std::cos(static_cast<double>(k + 3) * phi + phase[k]);
    return radius - rho;
  }
};

struct SynthLayout {
  std::vector<Blob> blobs;       // foreground, part of the mask
  std::vector<Blob> distractors;  // low-contrast background structures
};

namespace detail {

inline std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53 random bits; independent of the standard library's distribution code.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline Blob random_blob(std::mt19937_64& rng, double canvas, double jitter, double size_lo, double size_hi) {
  Blob b;
  b.cx = uniform(rng, 0.25, 0.75) * canvas;
  b.cy = uniform(rng, 0.25, 0.75) * canvas;
  b.semi_a = uniform(rng, size_lo, size_hi) * canvas;
  b.semi_b = uniform(rng, size_lo, size_hi) * canvas;
  b.rotation = uniform(rng, 0.0, std::numbers::pi);
  for (std::size_t k = 0; k < b.amp.size(); ++k) {
    b.amp[k] = jitter * uniform(rng, -1.0, 1.0) / std::sqrt(static_cast<double>(b.amp.size()));
    b.phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  return b;
}

}  // namespace detail

/// Blob geometry of sample `index`; generate_synthetic rasterises exactly this.
inline SynthLayout synth_layout(const SynthSpec& spec, int index) {
  auto rng = detail::sample_rng(spec.seed, static_cast<std::uint64_t>(index), 1);
  SynthLayout layout;
  const int span = spec.blob_max - spec.blob_min + 1;
  const int n = spec.blob_min + static_cast<int>(rng() % static_cast<std::uint64_t>(span));
  for (int i = 0; i < n; ++i)
    layout.blobs.push_back(detail::random_blob(rng, spec.canvas, spec.boundary_noise, 0.08, 0.2));
  const int distractors = static_cast<int>(rng() % 3);
  for (int i = 0; i < distractors; ++i)
    layout.distractors.push_back(detail::random_blob(rng, spec.canvas, 0.0, 0.04, 0.1));
  return layout;
}

/// Rasterises one sample. Pixel (x, y) is sampled at its centre (x+0.5, y+0.5).
///
/// Appearance: image = (1-c) * background + c * tint * soft_mask + (1-c) * texture,
/// clamped to [0,1]. With contrast c = 1 the image is tint * mask exactly.
inline ImageSample synth_sample(const SynthSpec& spec, int index) {
  const SynthLayout layout = synth_layout(spec, index);
  auto rng = detail::sample_rng(spec.seed, static_cast<std::uint64_t>(index), 2);
  const int n = spec.canvas;
  const double c = spec.contrast;
  const double softness = 1.5 * (1.0 - c);  // edge ramp half-width in pixels

  std::array<double, 3> base{}, tint{};
  for (int ch = 0; ch < 3; ++ch) {
    base[static_cast<std::size_t>(ch)] = detail::uniform(rng, 0.25, 0.55);
    tint[static_cast<std::size_t>(ch)] = detail::uniform(rng, 0.85, 1.0);
  }
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<Wave, 3> waves{};
  for (auto& w : waves)
    w = {detail::uniform(rng, -3.0, 3.0), detail::uniform(rng, -3.0, 3.0),
         detail::uniform(rng, 0.0, 2.0 * std::numbers::pi), detail::uniform(rng, 0.03, 0.08)};
  const double distractor_level = 0.45 * c;

  ImageSample s;
  s.id = spec.id_prefix + "_" + [&] {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return std::string(buf);
  }();
  s.source = SampleSource::synthetic;
  s.image = Tensor<float>(3, n, n);
  s.mask = Tensor<float>(1, n, n);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double best = -1e300;
      for (const auto& b : layout.blobs) best = std::max(best, b.margin(px, py));
      const bool inside = best >= 0.0;
      const double soft = softness > 0.0 ? std::clamp(0.5 + best / (2.0 * softness), 0.0, 1.0)
                                         : (inside ? 1.0 : 0.0);
      double distract = 0.0;
      for (const auto& d : layout.distractors) {
        const double m = d.margin(px, py);
        distract = std::max(distract, std::clamp(0.5 + m / 3.0, 0.0, 1.0));
      }
      double field = 0.0;
      for (const auto& w : waves)
        field += w.amp * std::cos(2.0 * std::numbers::pi * (w.fx * px + w.fy * py) / n + w.phase);
      const double texture = 0.06 * gauss(rng);
      s.mask(0, y, x) = inside ? 1.0f : 0.0f;
      for (int ch = 0; ch < 3; ++ch) {
        const auto k = static_cast<std::size_t>(ch);
        const double bg = base[k] + field + distractor_level * distract * tint[k];
        const double v = (1.0 - c) * bg + c * tint[k] * soft + (1.0 - c) * texture;
        s.image(ch, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  return s;
}

/// Deterministic synthetic corpus: identical specs give bitwise-identical samples.
inline std::vector<ImageSample> generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  std::vector<ImageSample> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) out.push_back(synth_sample(spec, i));
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

inline constexpr std::array<double, 3> kAugmentScales{0.75, 1.0, 1.25};

struct AugmentPlan {
  bool hflip = false;
  bool vflip = false;
  double scale = 1.0;
};

/// Draws flips (p = 0.5 each) and one scale from {0.75, 1.0, 1.25}.
inline AugmentPlan plan_augment(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t u = rng();
  AugmentPlan p;
  p.hflip = (u & 1u) != 0;
  p.vflip = (u & 2u) != 0;
  p.scale = kAugmentScales[static_cast<std::size_t>((u >> 2) % kAugmentScales.size())];
  return p;
}

inline int scaled_extent(int n, double scale) {
  return std::max(1, static_cast<int>(std::lround(scale * n)));
}

template <typename T>
Tensor<T> apply_flips(const Tensor<T>& t, const AugmentPlan& plan) {
  Tensor<T> out = plan.hflip ? flip_horizontal(t) : t;
  return plan.vflip ? flip_vertical(out) : out;
}

inline ImageSample apply_augment(const ImageSample& s, const AugmentPlan& plan) {
  ImageSample out{s.id, apply_flips(s.image, plan), apply_flips(s.mask, plan), s.source};
  if (plan.scale != 1.0) {
    const int h = scaled_extent(s.height(), plan.scale);
    const int w = scaled_extent(s.width(), plan.scale);
    out.image = resize_bilinear(out.image, h, w);
    out.mask = binarize(resize_nearest(out.mask, h, w));
  }
  return out;
}

inline ImageSample augment(const ImageSample& s, std::uint64_t seed) {
  return apply_augment(s, plan_augment(seed));
}

// ---------------------------------------------------------------------------
// Disk layout: <root>/images/*.{png,jpg}, <root>/masks/*.png, matched by stem.

namespace detail {

inline bool has_extension(const std::filesystem::path& p, std::initializer_list<const char*> exts) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return std::any_of(exts.begin(), exts.end(), [&](const char* x) { return e == x; });
}

inline std::map<std::string, std::filesystem::path> index_by_stem(const std::filesystem::path& dir,
                                                                  std::initializer_list<const char*> exts) {
  std::map<std::string, std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !has_extension(entry.path(), exts)) continue;
    const auto stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second)
      throw ConfigError("duplicate stem '" + stem + "' in " + dir.string());
  }
  return out;
}

}  // namespace detail

/// Resolves `<root>/<split>` when present, else `root` itself (already split).
inline std::filesystem::path split_directory(const std::filesystem::path& root, Split split) {
  const auto nested = root / to_string(split);
  return std::filesystem::is_directory(nested / "images") ? nested : root;
}

inline std::vector<ImageSample> load_directory(const std::filesystem::path& dir) {
  const auto images_dir = dir / "images";
  const auto masks_dir = dir / "masks";
  if (!std::filesystem::is_directory(images_dir))
    throw ConfigError("dataset directory missing: " + images_dir.string());
  if (!std::filesystem::is_directory(masks_dir))
    throw ConfigError("dataset directory missing: " + masks_dir.string());

  const auto images = detail::index_by_stem(images_dir, {".png", ".jpg", ".jpeg"});
  const auto masks = detail::index_by_stem(masks_dir, {".png"});
  for (const auto& [stem, path] : images)
    if (!masks.contains(stem)) throw FormatError("orphan image without mask: " + path.string());
  for (const auto& [stem, path] : masks)
    if (!images.contains(stem)) throw FormatError("orphan mask without image: " + path.string());

  std::vector<ImageSample> out;
  out.reserve(images.size());
  for (const auto& [stem, image_path] : images) {  // std::map: lexicographic order
    ImageSample s;
    s.id = stem;
    s.source = SampleSource::disk;
    s.image = io::read_rgb(image_path);
    const Tensor<float> raw = io::read_gray(masks.at(stem));
    const std::size_t off = static_cast<std::size_t>(
        std::count_if(raw.begin(), raw.end(), [](float v) { return v != 0.0f && v != 1.0f; }));
    if (off > 0)
      log::warn("mask " + masks.at(stem).string() + " has " + std::to_string(off) +
                " non-binary pixels; binarized at 0.5");
    s.mask = binarize(raw);
    if (s.mask.height() != s.image.height() || s.mask.width() != s.image.width())
      throw ShapeError("image/mask size mismatch for " + stem);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<ImageSample> load_dataset(const std::filesystem::path& root, Split split) {
  if (!std::filesystem::is_directory(root)) throw ConfigError("dataset root missing: " + root.string());
  return load_directory(split_directory(root, split));
}

inline void write_directory(const std::filesystem::path& dir, const std::vector<ImageSample>& samples) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  for (const auto& s : samples) {
    io::write_png(dir / "images" / (s.id + ".png"), s.image);
    io::write_png(dir / "masks" / (s.id + ".png"), s.mask);
  }
}

inline constexpr const char* kSynthProvenanceFile = "synth_spec.json";

/// Writes train and test splits of a synthetic corpus plus the provenance record.
/// The two specs should differ in seed and id prefix so the splits stay disjoint.
inline void write_synthetic_dataset(const std::filesystem::path& root, const SynthSpec& train,
                                    const SynthSpec& test) {
  write_directory(root / "train", generate_synthetic(train));
  write_directory(root / "test", generate_synthetic(test));
  nlohmann::json j{{"train", train}, {"test", test}, {"generator", "perturbed-ellipse v1"}};
  std::ofstream(root / kSynthProvenanceFile) << j.dump(2) << '\n';
}

}  // namespace litebound

#endif  // LITEBOUND_DATA_HPP
