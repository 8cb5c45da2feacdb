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


#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "litebound/data.hpp"
#include "litebound/image_io.hpp"
#include "litebound/log.hpp"
#include "test_util.hpp"

namespace lb = litebound;
using lb::ImageSample;
using lb::Tensor;
using lb::testing::TempDir;

namespace {

ImageSample small_sample(int h, int w, std::uint64_t seed) {
  return {"s" + std::to_string(seed), lb::testing::random_tensor<float>({3, h, w}, seed, 0.0, 1.0),
          lb::testing::random_mask(h, w, seed + 100)};
}

// Finds an augmentation seed whose plan matches the predicate.
template <typename Pred>
std::uint64_t seed_where(Pred pred) {
  for (std::uint64_t s = 0; s < 10000; ++s)
    if (pred(lb::plan_augment(s))) return s;
  ADD_FAILURE() << "no seed found";
  return 0;
}

}  // namespace

TEST(RegionSplit, AllOnesMaskKeepsWholeImageInPolyp) {
  auto s = small_sample(8, 8, 1);
  s.mask.fill(1.0f);
  auto r = lb::region_split(s);
  EXPECT_EQ(r.polyp_input, s.image);
  for (float v : r.nonpolyp_input) EXPECT_EQ(v, 0.0f);
}

TEST(RegionSplit, AllZerosMaskKeepsWholeImageInBackground) {
  auto s = small_sample(8, 8, 2);
  s.mask.fill(0.0f);
  auto r = lb::region_split(s);
  EXPECT_EQ(r.nonpolyp_input, s.image);
  for (float v : r.polyp_input) EXPECT_EQ(v, 0.0f);
}

TEST(RegionSplit, HalvesSumToImageExactly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = small_sample(9, 13, seed);
    auto r = lb::region_split(s);
    EXPECT_EQ(r.polyp_input + r.nonpolyp_input, s.image);
  }
}

TEST(RegionSplit, RejectsNonBinaryMask) {
  auto s = small_sample(4, 4, 3);
  s.mask(0, 0, 0) = 0.5f;
  EXPECT_THROW(lb::region_split(s), lb::ShapeError);
}

TEST(Synthetic, IdenticalSpecsGiveIdenticalCorpora) {
  lb::SynthSpec spec;
  spec.count = 16;
  spec.canvas = 128;
  spec.seed = 7;
  auto a = lb::generate_synthetic(spec);
  auto b = lb::generate_synthetic(spec);
  ASSERT_EQ(a.size(), 16u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].mask, b[i].mask);
  }
  spec.seed = 8;
  EXPECT_NE(lb::generate_synthetic(spec)[0].image, a[0].image);
}

TEST(Synthetic, SamplesSatisfyContract) {
  lb::SynthSpec spec;
  spec.count = 8;
  spec.seed = 3;
  for (const auto& s : lb::generate_synthetic(spec)) {
    EXPECT_NO_THROW(lb::validate(s));
    EXPECT_EQ(s.height(), 128);
    EXPECT_EQ(s.source, lb::SampleSource::synthetic);
    const double fg = std::accumulate(s.mask.begin(), s.mask.end(), 0.0) / s.mask.size();
    EXPECT_GT(fg, 0.005);
    EXPECT_LT(fg, 0.9);
    for (float v : s.image) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
  }
}

TEST(Synthetic, ZeroBoundaryNoiseGivesPlainEllipses) {
  lb::SynthSpec spec;
  spec.boundary_noise = 0.0;
  spec.seed = 5;
  for (int i = 0; i < 10; ++i) {
    auto layout = lb::synth_layout(spec, i);
    ASSERT_FALSE(layout.blobs.empty());
    for (const auto& b : layout.blobs) {
      for (double a : b.amp) EXPECT_EQ(a, 0.0);
      // An unperturbed ellipse: the point at distance semi_a along the major axis lies on the boundary.
      const double px = b.cx + b.semi_a * std::cos(b.rotation);
      const double py = b.cy + b.semi_a * std::sin(b.rotation);
      EXPECT_NEAR(b.margin(px, py), 0.0, 1e-9);
    }
  }
}

TEST(Synthetic, MidpointThresholdRecoversMaskAtFullContrast) {
  lb::SynthSpec spec;
  spec.count = 6;
  spec.contrast = 1.0;
  spec.boundary_noise = 0.0;
  spec.seed = 11;
  for (const auto& s : lb::generate_synthetic(spec)) {
    // Oracle: mean intensity thresholded halfway between background (0) and tint (>= 0.85).
    for (int y = 0; y < s.height(); ++y)
      for (int x = 0; x < s.width(); ++x) {
        const double mean = (s.image(0, y, x) + s.image(1, y, x) + s.image(2, y, x)) / 3.0;
        ASSERT_EQ(mean >= 0.5 ? 1.0f : 0.0f, s.mask(0, y, x)) << s.id << " at " << y << "," << x;
      }
  }
}

TEST(Synthetic, RejectsTooSmallCanvas) {
  lb::SynthSpec spec;
  spec.canvas = 32;
  EXPECT_THROW(lb::generate_synthetic(spec), lb::ConfigError);
  spec.canvas = 128;
  spec.contrast = 0.0;
  EXPECT_THROW(lb::generate_synthetic(spec), lb::ConfigError);
}

TEST(Augment, IdentityPlanReturnsInput) {
  auto s = small_sample(16, 16, 4);
  const auto seed = seed_where([](const lb::AugmentPlan& p) { return !p.hflip && !p.vflip && p.scale == 1.0; });
  auto out = lb::augment(s, seed);
  EXPECT_EQ(out.image, s.image);
  EXPECT_EQ(out.mask, s.mask);
}

TEST(Augment, ScaleThreeQuartersTakes352To264) {
  ImageSample s{"big", Tensor<float>(3, 352, 352, 0.5f), Tensor<float>(1, 352, 352)};
  for (int y = 100; y < 200; ++y)
    for (int x = 50; x < 300; ++x) s.mask(0, y, x) = 1.0f;
  const auto seed = seed_where([](const lb::AugmentPlan& p) { return p.scale == 0.75; });
  auto out = lb::augment(s, seed);
  EXPECT_EQ(out.height(), 264);
  EXPECT_EQ(out.width(), 264);
  EXPECT_TRUE(lb::is_binary(out.mask));
  EXPECT_EQ(out.mask.height(), 264);
}

TEST(Augment, DoubleHorizontalFlipRestoresImage) {
  auto s = small_sample(12, 10, 5);
  lb::AugmentPlan flip{true, false, 1.0};
  auto twice = lb::apply_augment(lb::apply_augment(s, flip), flip);
  EXPECT_EQ(twice.image, s.image);
  EXPECT_EQ(twice.mask, s.mask);
  EXPECT_NE(lb::apply_augment(s, flip).image, s.image);
}

TEST(Augment, PlansCoverAllOptions) {
  std::set<double> scales;
  int h = 0, v = 0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    auto p = lb::plan_augment(s);
    scales.insert(p.scale);
    h += p.hflip;
    v += p.vflip;
  }
  EXPECT_EQ(scales, (std::set<double>{0.75, 1.0, 1.25}));
  EXPECT_GT(h, 100);
  EXPECT_LT(h, 200);
  EXPECT_GT(v, 100);
  EXPECT_LT(v, 200);
}

TEST(LoadDataset, ThreeMatchedPairsLoadSortedByName) {
  TempDir dir("load");
  std::vector<ImageSample> samples;
  for (std::string id : {"c", "a", "b"}) {
    auto s = small_sample(8, 8, id[0]);
    s.id = id;
    samples.push_back(s);
  }
  lb::write_directory(dir / "train", samples);
  auto loaded = lb::load_dataset(dir.path(), lb::Split::train);
  ASSERT_EQ(loaded.size(), 3u);
  EXPECT_EQ(loaded[0].id, "a");
  EXPECT_EQ(loaded[1].id, "b");
  EXPECT_EQ(loaded[2].id, "c");
  EXPECT_EQ(loaded[0].mask, samples[1].mask);
}

TEST(LoadDataset, OrphanImageIsAnError) {
  TempDir dir("orphan");
  auto s = small_sample(8, 8, 1);
  s.id = "a";
  lb::write_directory(dir.path(), {s});
  std::filesystem::remove(dir / "masks/a.png");
  EXPECT_THROW(lb::load_dataset(dir.path(), lb::Split::train), lb::FormatError);
}

TEST(LoadDataset, EightBitMaskIsMappedToZeroOne) {
  TempDir dir("mask255");
  Tensor<float> image(3, 4, 4, 0.2f);
  Tensor<float> mask(1, 4, 4);
  mask(0, 1, 1) = 1.0f;  // written as 255
  lb::io::write_png(dir / "images/x.png", image);
  lb::io::write_png(dir / "masks/x.png", mask);
  auto loaded = lb::load_dataset(dir.path(), lb::Split::test);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].mask, mask);
}

TEST(LoadDataset, NonBinaryMaskWarnsAndBinarizes) {
  TempDir dir("graymask");
  Tensor<float> mask(1, 4, 4);
  mask(0, 0, 0) = 0.8f;
  mask(0, 0, 1) = 0.2f;
  lb::io::write_png(dir / "images/x.png", Tensor<float>(3, 4, 4));
  lb::io::write_png(dir / "masks/x.png", mask);
  std::vector<std::string> warnings;
  lb::log::set_sink([&](lb::log::Level l, const std::string& m) {
    if (l == lb::log::Level::warning) warnings.push_back(m);
  });
  auto loaded = lb::load_dataset(dir.path(), lb::Split::train);
  lb::log::set_sink(nullptr);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(loaded[0].mask(0, 0, 0), 1.0f);
  EXPECT_EQ(loaded[0].mask(0, 0, 1), 0.0f);
}

TEST(LoadDataset, MissingDirectoryIsAConfigError) {
  TempDir dir("missing");
  EXPECT_THROW(lb::load_dataset(dir / "nope", lb::Split::train), lb::ConfigError);
  EXPECT_THROW(lb::load_dataset(dir.path(), lb::Split::train), lb::ConfigError);
}

TEST(LoadDataset, SyntheticDiskRoundTripKeepsMasksExactly) {
  TempDir dir("synthdisk");
  lb::SynthSpec train, test;
  train.count = 3;
  test.count = 2;
  test.seed = 1;
  test.id_prefix = "synth_test";
  lb::write_synthetic_dataset(dir.path(), train, test);
  EXPECT_TRUE(std::filesystem::exists(dir / lb::kSynthProvenanceFile));
  auto tr = lb::load_dataset(dir.path(), lb::Split::train);
  auto te = lb::load_dataset(dir.path(), lb::Split::test);
  ASSERT_EQ(tr.size(), 3u);
  ASSERT_EQ(te.size(), 2u);
  EXPECT_EQ(tr[0].mask, lb::generate_synthetic(train)[0].mask);
  EXPECT_LT(lb::max_abs_diff(tr[0].image, lb::generate_synthetic(train)[0].image), 0.5 / 255 + 1e-6);
}
