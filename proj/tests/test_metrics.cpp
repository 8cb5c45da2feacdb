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

#include "litebound/metrics.hpp"
#include "test_util.hpp"

namespace lb = litebound;
namespace mt = litebound::metrics;
using lb::Tensor;
using lb::testing::TempDir;

namespace {

Tensor<double> from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows.begin()->size());
  Tensor<double> t(1, h, w);
  int y = 0;
  for (const auto& r : rows) {
    int x = 0;
    for (int v : r) t(0, y, x++) = v;
    ++y;
  }
  return t;
}

Tensor<double> complement(const Tensor<double>& t) {
  Tensor<double> c(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) c[i] = 1.0 - t[i];
  return c;
}

Tensor<double> half_plane(int n) {
  Tensor<double> g(1, n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n / 2; ++x) g(0, y, x) = 1.0;
  return g;
}

// Inputs rebuilt from tests/golden/gen_metric_golden.py.
struct GoldenCase {
  int h, w, cy, cx, ry, rx;
  bool smooth;
};
constexpr GoldenCase kGoldenCases[] = {
    {16, 16, 7, 8, 5, 4, false}, {20, 24, 9, 13, 6, 8, true}, {31, 17, 12, 6, 9, 5, true},
    {24, 24, 5, 18, 3, 4, false}, {18, 22, 9, 10, 7, 9, true},
};
struct Golden {
  int index;
  double fbw, s_alpha, e_max_reference;  // e_max_reference divides by N - 1
};
constexpr Golden kGolden[] = {
    {0, 0.3453412160823761, 0.32956373860065385, 0.6586169581892424},
    {1, 0.6726568751422474, 0.8989192203259178, 1.000020065939003},
    {2, 0.6350061193064086, 0.8750043176380091, 1.000040434153749},
    {3, 0.08782549062329965, 0.3281503922870315, 0.9102139426453348},
    {4, 0.8033649833648395, 0.9199378412445677, 0.9999872459144106},
};

std::pair<Tensor<double>, Tensor<double>> golden_inputs(int index) {
  const auto& c = kGoldenCases[index];
  Tensor<double> pred(1, c.h, c.w), gt(1, c.h, c.w);
  for (int y = 0; y < c.h; ++y)
    for (int x = 0; x < c.w; ++x) {
      const bool in = (y - c.cy) * (y - c.cy) * c.rx * c.rx + (x - c.cx) * (x - c.cx) * c.ry * c.ry <=
                      c.rx * c.rx * c.ry * c.ry;
      int v = c.smooth ? (in ? 200 : 40) + (y * 7 + x * 3 + index) % 30 : (y * 37 + x * 91 + y * x * 3 + index * 53) % 256;
      if (y == 0 && x == 0) v = 0;
      if (y == c.h - 1 && x == c.w - 1) v = 255;
      pred(0, y, x) = v / 255.0;
      gt(0, y, x) = in ? 1.0 : 0.0;
    }
  return {pred, gt};
}

}  // namespace

TEST(Overlap, PerfectPrediction) {
  auto g = lb::testing::random_mask(6, 6, 1).cast<double>();
  auto o = mt::dice_iou_mae(g, g);
  EXPECT_EQ(o.dice, 1.0);
  EXPECT_EQ(o.iou, 1.0);
  EXPECT_EQ(o.mae, 0.0);
}

TEST(Overlap, DisjointEqualAreas) {
  auto g = from_rows({{1, 1, 0, 0}, {1, 1, 0, 0}});
  auto p = from_rows({{0, 0, 1, 1}, {0, 0, 1, 1}});
  auto o = mt::dice_iou_mae(p, g);
  EXPECT_EQ(o.dice, 0.0);
  EXPECT_EQ(o.iou, 0.0);
}

TEST(Overlap, SupersetOfDoubleArea) {
  auto g = from_rows({{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  auto p = from_rows({{1, 1, 1, 1}, {1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  auto o = mt::dice_iou_mae(p, g);
  EXPECT_DOUBLE_EQ(o.dice, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(o.iou, 0.5);
}

TEST(Overlap, ExhaustiveThreeByThreeMatchesPixelCounting) {
  for (int a = 0; a < 512; ++a)
    for (int b = 0; b < 512; ++b) {
      Tensor<double> p(1, 3, 3), g(1, 3, 3);
      int tp = 0, fp = 0, fn = 0, tn = 0;
      for (int i = 0; i < 9; ++i) {
        const int pi = (a >> i) & 1, gi = (b >> i) & 1;
        p[static_cast<std::size_t>(i)] = pi;
        g[static_cast<std::size_t>(i)] = gi;
        tp += pi && gi;
        fp += pi && !gi;
        fn += !pi && gi;
        tn += !pi && !gi;
      }
      const auto o = mt::dice_iou_mae(p, g);
      const double dice = (2 * tp + fp + fn) == 0 ? 1.0 : 2.0 * tp / (2 * tp + fp + fn);
      const double iou = (tp + fp + fn) == 0 ? 1.0 : double(tp) / (tp + fp + fn);
      ASSERT_EQ(o.dice, dice);
      ASSERT_EQ(o.iou, iou);
      ASSERT_EQ(o.mae, double(fp + fn) / 9.0);
      ASSERT_NEAR(o.mae, 1.0 - double(tp + tn) / 9.0, 1e-15);
      ASSERT_GE(o.dice, o.iou);
      if (o.dice == o.iou) {
        ASSERT_TRUE(o.dice == 0.0 || o.dice == 1.0);
      }
    }
}

TEST(DistanceTransform, MatchesBruteForce) {
  const int h = 9, w = 11;
  auto m = lb::testing::random_mask(h, w, 2, 0.15);
  std::vector<std::uint8_t> set(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) set[i] = m[i] > 0.5f;
  auto dt = mt::distance_transform(set, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          if (set[static_cast<std::size_t>(yy * w + xx)]) best = std::min(best, std::hypot(y - yy, x - xx));
      const auto i = static_cast<std::size_t>(y * w + x);
      EXPECT_NEAR(dt.distance[i], best, 1e-12);
      const long n = dt.nearest[i];
      EXPECT_TRUE(set[static_cast<std::size_t>(n)]);
      EXPECT_NEAR(std::hypot(y - n / w, x - n % w), best, 1e-12);
    }
}

TEST(GoldenReference, WeightedFMeasureSAndEMatchReferencePackage) {
  for (const auto& g : kGolden) {
    auto [pred, gt] = golden_inputs(g.index);
    const double n = static_cast<double>(gt.size());
    EXPECT_NEAR(mt::weighted_fmeasure(pred, gt), g.fbw, 1e-9) << g.index;
    EXPECT_NEAR(mt::s_measure(pred, gt), g.s_alpha, 1e-9) << g.index;
    // The reference normalises E by N - 1; this implementation by N.
    EXPECT_NEAR(mt::e_measure_max(pred, gt), g.e_max_reference * (n - 1.0) / n, 1e-9) << g.index;
  }
}

TEST(WeightedF, PerfectIsOneAndComplementIsLow) {
  auto g = half_plane(16);
  EXPECT_NEAR(mt::weighted_fmeasure(g, g), 1.0, 1e-12);
  // Reference package value for this pair (tests/golden/gen_metric_golden.py).
  EXPECT_NEAR(mt::weighted_fmeasure(complement(g), g), 0.1483491512245681, 1e-9);
}

TEST(WeightedF, EmptyGroundTruthConvention) {
  Tensor<double> zero(1, 5, 5);
  EXPECT_EQ(mt::weighted_fmeasure(zero, zero), 1.0);
  auto p = zero;
  p(0, 2, 2) = 0.1;
  EXPECT_EQ(mt::weighted_fmeasure(p, zero), 0.0);
}

TEST(WeightedF, HorizontalFlipInvariance) {
  // Exact for a symmetric tie-free layout; nearest-pixel ties can break the symmetry slightly otherwise.
  auto g = from_rows({{0, 0, 0, 0, 0, 0}, {0, 1, 1, 1, 0, 0}, {0, 1, 1, 1, 1, 0}, {0, 0, 1, 1, 0, 0}, {0, 0, 0, 0, 0, 0}});
  auto p = lb::testing::random_tensor<double>({1, 5, 6}, 3, 0.0, 1.0);
  EXPECT_NEAR(mt::weighted_fmeasure(lb::flip_horizontal(p), lb::flip_horizontal(g)), mt::weighted_fmeasure(p, g), 0.02);
  for (int k = 0; k < 20; ++k) {
    auto gg = lb::testing::random_mask(12, 12, 100 + k, 0.4).cast<double>();
    auto pp = lb::testing::random_tensor<double>({1, 12, 12}, 200 + k, 0.0, 1.0);
    EXPECT_NEAR(mt::weighted_fmeasure(lb::flip_horizontal(pp), lb::flip_horizontal(gg)), mt::weighted_fmeasure(pp, gg),
                0.02);
  }
}

TEST(SMeasure, PerfectIsOne) {
  for (int k = 0; k < 10; ++k) {
    auto g = lb::testing::random_mask(10, 13, 10 + k).cast<double>();
    EXPECT_NEAR(mt::s_measure(g, g), 1.0, 1e-6);
  }
}

TEST(SMeasure, DegenerateGroundTruth) {
  auto p = lb::testing::random_tensor<double>({1, 6, 6}, 4, 0.0, 1.0);
  double mean = 0;
  for (double v : p) mean += v;
  mean /= 36.0;
  EXPECT_NEAR(mt::s_measure(p, Tensor<double>(1, 6, 6)), 1.0 - mean, 1e-15);
  EXPECT_NEAR(mt::s_measure(p, Tensor<double>(1, 6, 6, 1.0)), mean, 1e-15);
}

TEST(SMeasure, RotationInvariance) {
  // Exact when the centroid falls on a pixel centre of an odd-sized symmetric split.
  auto g = from_rows({{0, 0, 0, 0, 0}, {0, 1, 1, 1, 0}, {0, 1, 1, 1, 0}, {0, 1, 1, 1, 0}, {0, 0, 0, 0, 0}});
  auto p = lb::testing::random_tensor<double>({1, 5, 5}, 5, 0.0, 1.0);
  const double s = mt::s_measure(p, g);
  EXPECT_NEAR(mt::s_measure(lb::rotate180(p), lb::rotate180(g)), s, 0.05);
  for (int k = 0; k < 20; ++k) {
    auto gg = lb::testing::random_mask(12, 12, 300 + k, 0.4).cast<double>();
    auto pp = lb::testing::random_tensor<double>({1, 12, 12}, 400 + k, 0.0, 1.0);
    EXPECT_NEAR(mt::s_measure(lb::rotate180(pp), lb::rotate180(gg)), mt::s_measure(pp, gg), 0.05);
  }
}

TEST(EMeasure, PerfectIsOne) {
  for (int k = 0; k < 10; ++k) {
    auto g = lb::testing::random_mask(8, 9, 20 + k).cast<double>();
    EXPECT_NEAR(mt::e_measure_max(g, g), 1.0, 1e-12);
  }
}

TEST(EMeasure, ComplementScoresAQuarter) {
  // Every threshold yields either the complement (alignment -1 everywhere, score 0) or an
  // empty/full map with zero alignment, which scores (0 + 1)^2 / 4.
  auto g = half_plane(8);
  EXPECT_NEAR(mt::e_measure_max(complement(g), g), 0.25, 1e-12);
  EXPECT_NEAR(mt::e_measure_at(complement(g), g, 0.5), 0.0, 1e-12);
}

TEST(EMeasure, MaxDominatesFixedThreshold) {
  for (int k = 0; k < 10; ++k) {
    auto g = lb::testing::random_mask(10, 10, 40 + k).cast<double>();
    auto p = lb::testing::random_tensor<double>({1, 10, 10}, 50 + k, 0.0, 1.0);
    EXPECT_GE(mt::e_measure_max(p, g) + 1e-15, mt::e_measure_at(p, g, 0.5));
  }
}

TEST(BoundaryBand, RestrictsToTubeAroundContour) {
  Tensor<double> g(1, 20, 20);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) g(0, y, x) = 1.0;
  EXPECT_EQ(mt::boundary_band_dice(g, g), 1.0);
  // Errors far from the contour are ignored.
  auto p = g;
  p(0, 0, 0) = 1.0;
  p(0, 10, 10) = 0.0;  // centre pixel, distance 5 from the contour
  EXPECT_EQ(mt::boundary_band_dice(p, g), 1.0);
  auto q = g;
  q(0, 5, 5) = 0.0;
  EXPECT_LT(mt::boundary_band_dice(q, g), 1.0);
}

TEST(Report, AggregationAndCsvRoundTrip) {
  TempDir dir("report");
  std::vector<mt::MetricRow> rows{{"a", 1, 1, 1, 1, 1, 0}, {"b", 0.5, 0.25, 0.75, 0.6, 0.8, 0.1}};
  auto r = mt::aggregate(rows);
  EXPECT_DOUBLE_EQ(r.mdice, 0.75);
  EXPECT_DOUBLE_EQ(r.miou, 0.625);
  EXPECT_DOUBLE_EQ(r.mae, 0.05);
  mt::write_report_csv(dir / "r.csv", r);
  auto back = mt::read_report_csv(dir / "r.csv");
  EXPECT_EQ(mt::summary(back), mt::summary(r));
  EXPECT_EQ(back.per_sample[1].sample_id, "b");
  EXPECT_THROW(mt::aggregate({}), lb::ConfigError);
  EXPECT_EQ(lb::testing::slurp(dir / "r.csv").substr(0, 46), "sample_id,mdice,miou,fbw,s_alpha,e_phi_max,mae");
}

TEST(Report, PerfectSingleSample) {
  auto g = half_plane(12);
  auto r = mt::aggregate({mt::score_sample("x", g, g)});
  EXPECT_NEAR(r.mdice, 1.0, 1e-12);
  EXPECT_NEAR(r.miou, 1.0, 1e-12);
  EXPECT_NEAR(r.fbw, 1.0, 1e-12);
  EXPECT_NEAR(r.s_alpha, 1.0, 1e-6);
  EXPECT_NEAR(r.e_phi_max, 1.0, 1e-12);
  EXPECT_EQ(r.mae, 0.0);
}

TEST(Report, PermutationInvariant) {
  std::vector<mt::MetricRow> rows{{"a", 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {"b", 0.9, 0.8, 0.7, 0.6, 0.5, 0.4},
                                  {"c", 0.3, 0.3, 0.3, 0.3, 0.3, 0.3}};
  auto r1 = mt::aggregate(rows);
  std::reverse(rows.begin(), rows.end());
  auto r2 = mt::aggregate(rows);
  EXPECT_NEAR(r1.mdice, r2.mdice, 1e-15);
  EXPECT_NEAR(r1.fbw, r2.fbw, 1e-15);
}
