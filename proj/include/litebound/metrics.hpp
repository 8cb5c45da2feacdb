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

#ifndef LITEBOUND_METRICS_HPP
#define LITEBOUND_METRICS_HPP

// Segmentation quality measures. Predictions are 1 x H x W probability maps,
// ground truth is a binary 1 x H x W mask. The structure-aware measures follow
// the widely used saliency/polyp evaluation toolkits; deviations are noted
// at each function.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "litebound/error.hpp"
#include "litebound/tensor.hpp"

namespace litebound::metrics {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kDefaultThreshold = 0.5;

namespace detail {

template <typename P, typename G>
void require_same_shape(const Tensor<P>& pred, const Tensor<G>& gt, const char* what) {
  if (pred.height() != gt.height() || pred.width() != gt.width() || pred.channels() != 1 || gt.channels() != 1)
    throw ShapeError(std::string(what) + ": prediction " + pred.shape().str() + " vs ground truth " + gt.shape().str());
}

struct Plane {
  int h = 0, w = 0;
  std::vector<double> v;
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

template <typename T>
Plane to_plane(const Tensor<T>& t) {
  Plane p{t.height(), t.width(), std::vector<double>(t.size())};
  for (std::size_t i = 0; i < t.size(); ++i) p.v[i] = static_cast<double>(t[i]);
  return p;
}

template <typename T>
std::vector<std::uint8_t> to_bool(const Tensor<T>& t) {
  std::vector<std::uint8_t> b(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) b[i] = static_cast<double>(t[i]) >= 0.5 ? 1 : 0;
  return b;
}

}  // namespace detail

/// Exact Euclidean distance transform to the nearest set pixel, with the
/// index of that pixel (separable lower-envelope algorithm). Pixels with no
/// set pixel anywhere get +inf distance and index -1.
struct DistanceField {
  std::vector<double> distance;
  std::vector<long> nearest;
};

inline DistanceField distance_transform(const std::vector<std::uint8_t>& set, int h, int w) {
  const double inf = std::numeric_limits<double>::infinity();
  // Pass 1: nearest set row within each column.
  std::vector<double> col_d2(set.size(), inf);
  std::vector<int> col_row(set.size(), -1);
  for (int x = 0; x < w; ++x) {
    int last = -1;
    for (int y = 0; y < h; ++y) {
      if (set[static_cast<std::size_t>(y) * w + x]) last = y;
      if (last >= 0) {
        col_row[static_cast<std::size_t>(y) * w + x] = last;
        col_d2[static_cast<std::size_t>(y) * w + x] = static_cast<double>(y - last) * (y - last);
      }
    }
    last = -1;
    for (int y = h - 1; y >= 0; --y) {
      if (set[static_cast<std::size_t>(y) * w + x]) last = y;
      const auto i = static_cast<std::size_t>(y) * w + x;
      if (last >= 0 && static_cast<double>(last - y) * (last - y) < col_d2[i]) {
        col_row[i] = last;
        col_d2[i] = static_cast<double>(last - y) * (last - y);
      }
    }
  }
  // Pass 2: lower envelope of parabolas along each row.
  DistanceField out{std::vector<double>(set.size(), inf), std::vector<long>(set.size(), -1)};
  std::vector<int> sites(static_cast<std::size_t>(w));
  std::vector<double> bounds(static_cast<std::size_t>(w) + 1);
  for (int y = 0; y < h; ++y) {
    const double* f = &col_d2[static_cast<std::size_t>(y) * w];
    int k = -1;
    for (int q = 0; q < w; ++q) {
      if (!std::isfinite(f[q])) continue;
      while (k >= 0) {
        const int p = sites[static_cast<std::size_t>(k)];
        const double s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
        if (s <= bounds[static_cast<std::size_t>(k)]) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      sites[static_cast<std::size_t>(k)] = q;
      if (k == 0) {
        bounds[0] = -inf;
      } else {
        const int p = sites[static_cast<std::size_t>(k - 1)];
        bounds[static_cast<std::size_t>(k)] =
            ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      }
    }
    if (k < 0) continue;
    bounds[static_cast<std::size_t>(k) + 1] = inf;
    int j = 0;
    for (int x = 0; x < w; ++x) {
      while (bounds[static_cast<std::size_t>(j) + 1] < x) ++j;
      const int s = sites[static_cast<std::size_t>(j)];
      const auto i = static_cast<std::size_t>(y) * w + x;
      out.distance[i] = std::sqrt(static_cast<double>(x - s) * (x - s) + f[s]);
      out.nearest[i] = static_cast<long>(col_row[static_cast<std::size_t>(y) * w + s]) * w + s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Overlap {
  double dice = 0.0;
  double iou = 0.0;
  double mae = 0.0;
};

/// Dice and IoU of the prediction binarised at `threshold` (p >= threshold is
/// foreground); MAE on the continuous prediction. Empty vs empty scores 1.
template <typename P, typename G>
Overlap dice_iou_mae(const Tensor<P>& pred, const Tensor<G>& gt, double threshold = kDefaultThreshold) {
  detail::require_same_shape(pred, gt, "dice_iou_mae");
  long inter = 0, sum_p = 0, sum_g = 0;
  double abs_err = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = static_cast<double>(pred[i]);
    const bool g = static_cast<double>(gt[i]) >= 0.5;
    const bool b = p >= threshold;
    inter += (b && g) ? 1 : 0;
    sum_p += b ? 1 : 0;
    sum_g += g ? 1 : 0;
    abs_err += std::abs(p - (g ? 1.0 : 0.0));
  }
  Overlap o;
  const long uni = sum_p + sum_g - inter;
  o.dice = sum_p + sum_g == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sum_p + sum_g);
  o.iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  o.mae = abs_err / static_cast<double>(pred.size());
  return o;
}

/// Weighted F-measure (beta^2 = 1): errors diffused by a 7x7 Gaussian
/// (sigma 5, zero padding), background errors taken from the nearest
/// foreground pixel and weighted by 2 - exp(ln(0.5)/5 * distance).
/// Empty ground truth scores 1 for an all-zero prediction and 0 otherwise.
template <typename P, typename G>
double weighted_fmeasure(const Tensor<P>& pred, const Tensor<G>& gt) {
  detail::require_same_shape(pred, gt, "weighted_fmeasure");
  const int h = gt.height(), w = gt.width();
  const auto g = detail::to_bool(gt);
  const auto fg = detail::to_plane(pred);
  const bool any_fg = std::any_of(g.begin(), g.end(), [](auto v) { return v != 0; });
  if (!any_fg) return std::all_of(fg.v.begin(), fg.v.end(), [](double v) { return v == 0.0; }) ? 1.0 : 0.0;

  const std::size_t n = g.size();
  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(fg.v[i] - g[i]);
  const DistanceField dt = distance_transform(g, h, w);
  std::vector<double> et = err;
  for (std::size_t i = 0; i < n; ++i)
    if (!g[i]) et[i] = err[static_cast<std::size_t>(dt.nearest[i])];

  // 7x7 Gaussian, sigma 5, normalised to unit sum.
  constexpr int r = 3;
  std::array<double, 49> k{};
  double ks = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * 25.0));
      k[static_cast<std::size_t>((dy + r) * 7 + dx + r)] = v;
      ks += v;
    }
  for (auto& v : k) v /= ks;

  std::vector<double> ew(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y) * w + x;
      double ea = 0.0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          ea += k[static_cast<std::size_t>((dy + r) * 7 + dx + r)] * et[static_cast<std::size_t>(yy) * w + xx];
        }
      double e = err[i];
      if (g[i] && ea < e) e = ea;
      const double b = g[i] ? 1.0 : 2.0 - std::exp(std::log(0.5) / 5.0 * dt.distance[i]);
      ew[i] = e * b;
    }
  double sum_gt = 0.0, ew_fg = 0.0, ew_bg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i]) {
      sum_gt += 1.0;
      ew_fg += ew[i];
    } else {
      ew_bg += ew[i];
    }
  }
  const double tpw = sum_gt - ew_fg;
  const double fpw = ew_bg;
  const double recall = 1.0 - ew_fg / sum_gt;
  const double precision = tpw / (kEps + tpw + fpw);
  return 2.0 * recall * precision / (kEps + recall + precision);
}

namespace detail {

inline double region_ssim(const Plane& p, const Plane& g, int y0, int y1, int x0, int x1) {
  const double n = static_cast<double>(y1 - y0) * (x1 - x0);
  if (n <= 0) return 0.0;
  double mx = 0.0, my = 0.0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      mx += p.at(y, x);
      my += g.at(y, x);
    }
  mx /= n;
  my /= n;
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const double a = p.at(y, x) - mx, b = g.at(y, x) - my;
      sx += a * a;
      sy += b * b;
      sxy += a * b;
    }
  sx /= (n - 1 + kEps);
  sy /= (n - 1 + kEps);
  sxy /= (n - 1 + kEps);
  const double alpha = 4.0 * mx * my * sxy;
  const double beta = (mx * mx + my * my) * (sx + sy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  return beta == 0.0 ? 1.0 : 0.0;
}

// Mean and sample standard deviation of `values` where `sel` holds.
inline double object_similarity(const std::vector<double>& values, const std::vector<std::uint8_t>& sel) {
  double s = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (sel[i]) {
      s += values[i];
      ++n;
    }
  if (n == 0) return 0.0;
  const double mean = s / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (sel[i]) var += (values[i] - mean) * (values[i] - mean);
  const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

}  // namespace detail

/// Structure measure alpha * S_object + (1 - alpha) * S_region.
///
/// Region term: quadrants split at the ground-truth centroid rounded half to
/// even, the centroid row/column belonging to the top/left quadrants (as in
/// the reference toolkits). Degenerate ground truth: all-zero -> 1 - mean(pred),
/// all-one -> mean(pred).
template <typename P, typename G>
double s_measure(const Tensor<P>& pred, const Tensor<G>& gt, double alpha = 0.5) {
  detail::require_same_shape(pred, gt, "s_measure");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("s_measure: alpha must lie in [0,1]");
  const int h = gt.height(), w = gt.width();
  const auto g = detail::to_bool(gt);
  const auto p = detail::to_plane(pred);
  const std::size_t n = g.size();
  const double mean_gt = static_cast<double>(std::count(g.begin(), g.end(), std::uint8_t{1})) / static_cast<double>(n);
  const double mean_pred = std::accumulate(p.v.begin(), p.v.end(), 0.0) / static_cast<double>(n);
  if (mean_gt == 0.0) return 1.0 - mean_pred;
  if (mean_gt == 1.0) return mean_pred;

  // Object-aware term.
  std::vector<double> fgv(n), bgv(n);
  std::vector<std::uint8_t> not_g(n);
  for (std::size_t i = 0; i < n; ++i) {
    fgv[i] = p.v[i] * g[i];
    bgv[i] = (1.0 - p.v[i]) * (1 - g[i]);
    not_g[i] = static_cast<std::uint8_t>(1 - g[i]);
  }
  const double object = mean_gt * detail::object_similarity(fgv, g) +
                        (1.0 - mean_gt) * detail::object_similarity(bgv, not_g);

  // Region-aware term.
  double sy = 0.0, sx = 0.0, cnt = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (g[static_cast<std::size_t>(y) * w + x]) {
        sy += y;
        sx += x;
        cnt += 1.0;
      }
  const int cx = static_cast<int>(std::nearbyint(sx / cnt)) + 1;
  const int cy = static_cast<int>(std::nearbyint(sy / cnt)) + 1;
  detail::Plane gp{h, w, std::vector<double>(g.begin(), g.end())};
  const double area = static_cast<double>(h) * w;
  const double w1 = static_cast<double>(cx) * cy / area;
  const double w2 = static_cast<double>(w - cx) * cy / area;
  const double w3 = static_cast<double>(cx) * (h - cy) / area;
  const double w4 = 1.0 - w1 - w2 - w3;
  const double region = w1 * detail::region_ssim(p, gp, 0, cy, 0, cx) + w2 * detail::region_ssim(p, gp, 0, cy, cx, w) +
                        w3 * detail::region_ssim(p, gp, cy, h, 0, cx) + w4 * detail::region_ssim(p, gp, cy, h, cx, w);
  return std::max(0.0, alpha * object + (1.0 - alpha) * region);
}

inline constexpr int kEMeasureThresholds = 256;

/// Enhanced-alignment score of a binary map against binary ground truth,
/// averaged over all H*W pixels (so a perfect match scores exactly 1).
inline double e_measure_binary(const std::vector<std::uint8_t>& fm, const std::vector<std::uint8_t>& g) {
  const std::size_t n = g.size();
  const double sum_g = static_cast<double>(std::count(g.begin(), g.end(), std::uint8_t{1}));
  const double sum_f = static_cast<double>(std::count(fm.begin(), fm.end(), std::uint8_t{1}));
  double total = 0.0;
  if (sum_g == 0.0) {
    total = static_cast<double>(n) - sum_f;  // enhanced = 1 - FM
  } else if (sum_g == static_cast<double>(n)) {
    total = sum_f;  // enhanced = FM
  } else {
    const double mu_f = sum_f / static_cast<double>(n), mu_g = sum_g / static_cast<double>(n);
    // Only four (fm, g) combinations exist; evaluate each once.
    for (int f = 0; f <= 1; ++f)
      for (int gv = 0; gv <= 1; ++gv) {
        long count = 0;
        for (std::size_t i = 0; i < n; ++i) count += (fm[i] == f && g[i] == gv) ? 1 : 0;
        if (!count) continue;
        const double a = f - mu_f, b = gv - mu_g;
        const double align = 2.0 * a * b / (a * a + b * b + kEps);
        total += static_cast<double>(count) * (align + 1.0) * (align + 1.0) / 4.0;
      }
  }
  return total / static_cast<double>(n);
}

/// Maximum enhanced-alignment measure over 256 thresholds t_k = k/255
/// (foreground where pred >= t_k).
template <typename P, typename G>
double e_measure_max(const Tensor<P>& pred, const Tensor<G>& gt) {
  detail::require_same_shape(pred, gt, "e_measure_max");
  const auto g = detail::to_bool(gt);
  const auto p = detail::to_plane(pred);
  std::vector<std::uint8_t> fm(g.size());
  double best = 0.0;
  for (int k = 0; k < kEMeasureThresholds; ++k) {
    const double t = static_cast<double>(k) / (kEMeasureThresholds - 1);
    for (std::size_t i = 0; i < fm.size(); ++i) fm[i] = p.v[i] >= t ? 1 : 0;
    best = std::max(best, e_measure_binary(fm, g));
  }
  return best;
}

/// Same measure at a single threshold.
template <typename P, typename G>
double e_measure_at(const Tensor<P>& pred, const Tensor<G>& gt, double threshold) {
  detail::require_same_shape(pred, gt, "e_measure_at");
  const auto g = detail::to_bool(gt);
  std::vector<std::uint8_t> fm(g.size());
  for (std::size_t i = 0; i < fm.size(); ++i) fm[i] = static_cast<double>(pred[i]) >= threshold ? 1 : 0;
  return e_measure_binary(fm, g);
}

/// Dice restricted to pixels within `width` pixels (Euclidean) of the
/// ground-truth contour. Contour pixels are those with a 4-neighbour of the
/// other class.
template <typename P, typename G>
double boundary_band_dice(const Tensor<P>& pred, const Tensor<G>& gt, double width = 3.0,
                          double threshold = kDefaultThreshold) {
  detail::require_same_shape(pred, gt, "boundary_band_dice");
  const int h = gt.height(), w = gt.width();
  const auto g = detail::to_bool(gt);
  std::vector<std::uint8_t> contour(g.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto v = g[static_cast<std::size_t>(y) * w + x];
      auto differs = [&](int yy, int xx) {
        return yy >= 0 && yy < h && xx >= 0 && xx < w && g[static_cast<std::size_t>(yy) * w + xx] != v;
      };
      if (differs(y - 1, x) || differs(y + 1, x) || differs(y, x - 1) || differs(y, x + 1))
        contour[static_cast<std::size_t>(y) * w + x] = 1;
    }
  const DistanceField dt = distance_transform(contour, h, w);
  long inter = 0, sp = 0, sg = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(dt.distance[i] <= width)) continue;
    const bool b = static_cast<double>(pred[i]) >= threshold;
    inter += (b && g[i]) ? 1 : 0;
    sp += b ? 1 : 0;
    sg += g[i] ? 1 : 0;
  }
  return sp + sg == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(sp + sg);
}

// ---------------------------------------------------------------------------

struct MetricRow {
  std::string sample_id;
  double mdice = 0, miou = 0, fbw = 0, s_alpha = 0, e_phi_max = 0, mae = 0;
};

struct MetricReport {
  double mdice = 0, miou = 0, fbw = 0, s_alpha = 0, e_phi_max = 0, mae = 0;
  std::vector<MetricRow> per_sample;
};

template <typename P, typename G>
MetricRow score_sample(const std::string& id, const Tensor<P>& pred, const Tensor<G>& gt) {
  const Overlap o = dice_iou_mae(pred, gt);
  return {id, o.dice, o.iou, weighted_fmeasure(pred, gt), s_measure(pred, gt), e_measure_max(pred, gt), o.mae};
}

/// Dataset means of per-sample rows.
inline MetricReport aggregate(std::vector<MetricRow> rows) {
  if (rows.empty()) throw ConfigError("cannot aggregate metrics over an empty dataset");
  MetricReport r;
  for (const auto& x : rows) {
    r.mdice += x.mdice;
    r.miou += x.miou;
    r.fbw += x.fbw;
    r.s_alpha += x.s_alpha;
    r.e_phi_max += x.e_phi_max;
    r.mae += x.mae;
  }
  const double n = static_cast<double>(rows.size());
  r.mdice /= n;
  r.miou /= n;
  r.fbw /= n;
  r.s_alpha /= n;
  r.e_phi_max /= n;
  r.mae /= n;
  r.per_sample = std::move(rows);
  return r;
}

inline constexpr const char* kReportHeader = "sample_id,mdice,miou,fbw,s_alpha,e_phi_max,mae";

inline void write_report_csv(const std::filesystem::path& path, const MetricReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << kReportHeader << '\n';
  char buf[512];
  for (const auto& x : r.per_sample) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", x.sample_id.c_str(), x.mdice, x.miou,
                  x.fbw, x.s_alpha, x.e_phi_max, x.mae);
    os << buf;
  }
}

inline MetricReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw PrerequisiteError("report not found: " + path.string() + " (run `eval` first)");
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader) throw FormatError("unexpected report header in " + path.string());
  std::vector<MetricRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    MetricRow row;
    std::string field;
    std::getline(ss, row.sample_id, ',');
    double* slots[] = {&row.mdice, &row.miou, &row.fbw, &row.s_alpha, &row.e_phi_max, &row.mae};
    for (double* s : slots) {
      if (!std::getline(ss, field, ',')) throw FormatError("short row in " + path.string() + ": " + line);
      *s = std::stod(field);
    }
    rows.push_back(std::move(row));
  }
  return aggregate(std::move(rows));
}

/// Metric table in percent, MAE included, one decimal per column.
inline std::string summary(const MetricReport& r, const std::string& title = "") {
  char buf[512];
  std::string s;
  if (!title.empty()) s += title + "\n";
  s += "  mDice   mIoU  F^w_b    S_a  E^max    MAE\n";
  std::snprintf(buf, sizeof buf, "%7.1f%7.1f%7.1f%7.1f%7.1f%7.1f\n", 100 * r.mdice, 100 * r.miou, 100 * r.fbw,
                100 * r.s_alpha, 100 * r.e_phi_max, 100 * r.mae);
  s += buf;
  std::snprintf(buf, sizeof buf, "samples=%zu mdice=%.6f miou=%.6f fbw=%.6f s_alpha=%.6f e_phi_max=%.6f mae=%.6f\n",
                r.per_sample.size(), r.mdice, r.miou, r.fbw, r.s_alpha, r.e_phi_max, r.mae);
  s += buf;
  return s;
}

}  // namespace litebound::metrics

#endif  // LITEBOUND_METRICS_HPP
