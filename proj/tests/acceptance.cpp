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


// Acceptance runner: `acceptance --criterion N` prints one PASS/FAIL line and
// exits 0 on pass. Tolerances and budgets are pinned below.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "litebound.hpp"

namespace fs = std::filesystem;
namespace lb = litebound;
namespace mt = litebound::metrics;
using lb::Tensor;

namespace {

// Budgets (seconds) and tolerances.
constexpr double kBandAdditivityTol = 1e-5;
constexpr double kCrossTermTol = 1e-4;
constexpr double kRoundTripTol = 1e-5;
constexpr double kPerfectMetricTol = 1e-6;
constexpr double kFlipToleranceFw = 0.02;     // nearest-pixel ties in the distance transform
constexpr double kRotationToleranceS = 0.05;  // centroid rounding onto the pixel grid
constexpr double kSymmetryToleranceE = 1e-12;
constexpr double kGradientRelTol = 1e-3;
constexpr double kCompositionTol = 1e-9;
constexpr double kOverfitTarget = 0.95;
constexpr double kBandGainTarget = 0.01;
constexpr double kBudget1 = 10, kBudget3 = 120, kBudget4 = 120, kBudget7 = 600, kBudget8 = 2700;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <typename T>
Tensor<T> random_tensor(const lb::Shape& s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(s);
  for (auto& v : t) v = static_cast<T>(u(rng));
  return t;
}

Tensor<double> random_mask(int h, int w, std::uint64_t seed, double p = 0.5) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(p);
  Tensor<double> t(1, h, w);
  for (auto& v : t) v = b(rng) ? 1.0 : 0.0;
  return t;
}

class ScratchDir {
public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("litebound_acceptance_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

lb::CacheOptions cache_options(const lb::RunConfig& c) {
  return {c.distill.width, c.distill.projection_seed, c.distill.cutoff_ratio};
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto masks = lb::freq::make_masks(8, 8);
  double add = 0.0, cross = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto x = random_tensor<double>({16, 8, 8}, 1000 + k);
    const auto b = lb::freq::split_bands(x, masks);
    auto sum = b.low_spatial;
    sum += b.high_spatial;
    add = std::max(add, lb::max_abs_diff(sum, x));
    cross = std::max(cross, std::abs(lb::dot(b.low_spatial, b.high_spatial)));
  }
  const double t = seconds_since(t0);
  return {add < kBandAdditivityTol && cross < kCrossTermTol && t < kBudget1,
          fmt("100 tensors 16x8x8: max |low+high-x| = %.3g (< %g), max |<low,high>| = %.3g (< %g), %.2f s (< %g s)", add,
              kBandAdditivityTol, cross, kCrossTermTol, t, kBudget1)};
}

Outcome criterion2() {
  double err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto x = random_tensor<double>({16, 8, 8}, 1000 + k);
    err = std::max(err, lb::max_abs_diff(lb::freq::idft2<double>(lb::freq::dft2(x)), x));
  }
  return {err < kRoundTripTol, fmt("100 tensors 16x8x8: max |idft2(dft2(x)) - x| = %.3g (< %g)", err, kRoundTripTol)};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  long long mismatches = 0;
  for (int a = 0; a < 512; ++a)
    for (int b = 0; b < 512; ++b) {
      Tensor<double> p(1, 3, 3), g(1, 3, 3);
      int tp = 0, fp = 0, fn = 0;
      for (int i = 0; i < 9; ++i) {
        const int pi = (a >> i) & 1, gi = (b >> i) & 1;
        p[static_cast<std::size_t>(i)] = pi;
        g[static_cast<std::size_t>(i)] = gi;
        tp += pi && gi;
        fp += pi && !gi;
        fn += !pi && gi;
      }
      const auto o = mt::dice_iou_mae(p, g);
      const double dice = (2 * tp + fp + fn) == 0 ? 1.0 : 2.0 * tp / (2 * tp + fp + fn);
      const double iou = (tp + fp + fn) == 0 ? 1.0 : double(tp) / (tp + fp + fn);
      mismatches += o.dice != dice || o.iou != iou || o.mae != double(fp + fn) / 9.0;
    }

  double perfect = 0.0, flip_fw = 0.0, rot_s = 0.0, flip_e = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto g = random_mask(12 + k % 5, 10 + k % 7, 2000 + k, 0.3 + 0.01 * k);
    perfect = std::max({perfect, std::abs(mt::weighted_fmeasure(g, g) - 1.0), std::abs(mt::s_measure(g, g) - 1.0),
                        std::abs(mt::e_measure_max(g, g) - 1.0)});
    const auto p = random_tensor<double>(g.shape(), 3000 + k, 0.0, 1.0);
    flip_fw = std::max(flip_fw, std::abs(mt::weighted_fmeasure(lb::flip_horizontal(p), lb::flip_horizontal(g)) -
                                         mt::weighted_fmeasure(p, g)));
    rot_s = std::max(rot_s, std::abs(mt::s_measure(lb::rotate180(p), lb::rotate180(g)) - mt::s_measure(p, g)));
    flip_e = std::max(flip_e, std::abs(mt::e_measure_max(lb::flip_horizontal(p), lb::flip_horizontal(g)) -
                                       mt::e_measure_max(p, g)));
  }
  const double t = seconds_since(t0);
  const bool pass = mismatches == 0 && perfect <= kPerfectMetricTol && flip_fw <= kFlipToleranceFw &&
                    rot_s <= kRotationToleranceS && flip_e <= kSymmetryToleranceE && t < kBudget3;
  return {pass, fmt("3x3 oracle mismatches %lld / 262144; 50 perfect pairs max |metric-1| = %.3g (<= %g); "
                    "F^w hflip dev %.3g (<= %g), S rot180 dev %.3g (<= %g), E^max hflip dev %.3g (<= %g); %.1f s (< %g s)",
                    mismatches, perfect, kPerfectMetricTol, flip_fw, kFlipToleranceFw, rot_s, kRotationToleranceS, flip_e,
                    kSymmetryToleranceE, t, kBudget3)};
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  lb::UNetStudent<double> m(lb::StudentConfig{4, 8, 5});
  const auto img = random_tensor<double>({3, 16, 16}, 8, 0.0, 1.0);
  Tensor<double> gt(1, 16, 16);
  for (int y = 3; y < 11; ++y)
    for (int x = 5; x < 13; ++x) gt(0, y, x) = 1.0;
  lb::AlignmentTargets<double> targets;
  for (std::size_t k = 0; k < 4; ++k) targets.target[k] = random_tensor<double>({8, 1, 1}, 20 + k);
  const lb::PhaseLossSpec spec{2, true, lb::kDefaultLambdas};
  constexpr double h = 1e-6;
  double worst = 0.0;
  long long checked = 0, failed = 0;
  auto compare = [&](double fd, double an) {
    ++checked;
    const double scale = std::max(std::abs(fd), std::abs(an));
    if (std::abs(fd - an) > kGradientRelTol * scale + 1e-9) ++failed;
    if (scale > 1e-7) worst = std::max(worst, std::abs(fd - an) / scale);
  };

  // Logits: the loss as a function of the logit map with latents held fixed.
  const auto out = m.infer(img);
  auto loss_of_logits = [&](const Tensor<double>& z) {
    lb::Prediction<double> p{z, Tensor<double>(z.shape())};
    for (std::size_t i = 0; i < z.size(); ++i) p.probability[i] = lb::nn::sigmoid(z[i]);
    return lb::phase_loss(spec, p, gt, out.latents, &targets).breakdown.total;
  };
  const auto grad_z = lb::phase_loss(spec, out.prediction, gt, out.latents, &targets).grad_logits;
  auto z = out.prediction.logits;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = z[i];
    z[i] = v + h;
    const double fp = loss_of_logits(z);
    z[i] = v - h;
    const double fm = loss_of_logits(z);
    z[i] = v;
    compare((fp - fm) / (2 * h), grad_z[i]);
  }

  // Every latent-head parameter, through the full network.
  auto total = [&] {
    auto o = m.infer(img);
    return lb::phase_loss(spec, o.prediction, gt, o.latents, &targets).breakdown.total;
  };
  m.zero_grad();
  auto o = m.forward(img);
  auto loss = lb::phase_loss(spec, o.prediction, gt, o.latents, &targets);
  m.backward(loss.grad_logits, loss.grad_latents);
  for (auto* p : m.parameters(lb::ParamGroup::heads))
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double v = p->value[i];
      p->value[i] = v + h;
      const double fp = total();
      p->value[i] = v - h;
      const double fm = total();
      p->value[i] = v;
      compare((fp - fm) / (2 * h), p->grad[i]);
    }
  const double t = seconds_since(t0);
  return {failed == 0 && t < kBudget4,
          fmt("%lld gradient entries (logits + all head parameters), %lld beyond rel %g; worst rel error %.3g; %.1f s (< %g s)",
              checked, failed, kGradientRelTol, worst, t, kBudget4)};
}

Outcome criterion5() {
  const lb::PhaseLossSpec spec{2, true, {0.6, 0.1, 0.1, 0.1, 0.1}};
  double worst = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    lb::LossBreakdown b{u(rng), u(rng), {u(rng), u(rng), u(rng), u(rng)}, 0.0};
    const double expected = 0.6 * (b.bce + b.dice) + 0.1 * (b.align[0] + b.align[1] + b.align[2] + b.align[3]);
    worst = std::max(worst, std::abs(lb::recompose_total(spec, b) - expected));
  }
  // The live loss agrees with the same formula on its own components.
  lb::Prediction<double> p{Tensor<double>(1, 4, 4), Tensor<double>(1, 4, 4)};
  const auto probs = random_tensor<double>({1, 4, 4}, 3, 0.05, 0.95);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    p.probability[i] = probs[i];
    p.logits[i] = std::log(probs[i] / (1 - probs[i]));
  }
  lb::LatentQuartet<double> lat;
  lb::AlignmentTargets<double> tg;
  for (std::size_t k = 0; k < 4; ++k) {
    lat[k] = random_tensor<double>({3, 2, 2}, 10 + k);
    tg.target[k] = random_tensor<double>({3, 2, 2}, 20 + k);
  }
  const auto live = lb::phase_loss(spec, p, random_mask(4, 4, 9), lat, &tg).breakdown;
  const double expected = 0.6 * (live.bce + live.dice) + 0.1 * (live.align[0] + live.align[1] + live.align[2] + live.align[3]);
  worst = std::max(worst, std::abs(live.total - expected));
  return {worst <= kCompositionTol,
          fmt("1000 synthetic breakdowns + live loss: max |total - (0.6(bce+dice) + 0.1 sum L_i)| = %.3g (<= %g)", worst,
              kCompositionTol)};
}

std::vector<std::vector<float>> snapshot(const std::vector<lb::nn::Parameter<float>*>& ps) {
  std::vector<std::vector<float>> out;
  for (auto* p : ps) out.push_back(p->value);
  return out;
}

Outcome criterion6() {
  ScratchDir dir("c6");
  lb::RunConfig c;  // desk defaults: w = 8, D = 64
  c.schedule.scale = 1.0 / 8.0;
  c.seed = 6;
  lb::SynthSpec spec;
  spec.count = 16;
  spec.seed = 60;
  const auto data = lb::generate_synthetic(spec);
  const auto bank = lb::teach::make_mock_bank(c.teachers.bank, c.teachers.seed);
  lb::precompute_cache(bank, data, dir.path() / "cache", cache_options(c));
  const auto targets = lb::load_targets<float>(dir.path() / "cache", data, bank, cache_options(c));

  lb::UNetStudent<float> m(c.student_config());
  lb::Trainer<float> tr(c, m, dir.path() / "run");
  std::vector<std::vector<float>> enc_before;
  tr.on_epoch_end([&](int phase, int) {
    if (phase == 2) enc_before = snapshot(m.parameters(lb::ParamGroup::encoder));
    return true;
  });
  tr.train(data, &targets);
  const bool frozen = !enc_before.empty() && snapshot(m.parameters(lb::ParamGroup::encoder)) == enc_before;

  const auto schedule = lb::make_schedule(c);
  const bool five = schedule[0].epochs() == 5 && schedule[1].epochs() == 5 && schedule[2].epochs() == 5;
  double recompose = 0.0;
  bool boundaries = true;
  int prev_epoch = 0;
  std::array<int, 3> epochs_seen{};
  const auto rows = lb::read_log(tr.log_path());
  for (const auto& r : rows) {
    const auto& p = schedule[static_cast<std::size_t>(r.phase - 1)];
    recompose = std::max(recompose, std::abs(lb::recompose_total(p.loss_spec(), r.loss) - r.loss.total));
    boundaries &= r.epoch >= p.first_epoch && r.epoch <= p.last_epoch && r.epoch >= prev_epoch;
    boundaries &= (r.phase == 1) == (r.loss.align[0] == 0.0);
    if (r.epoch != prev_epoch) ++epochs_seen[static_cast<std::size_t>(r.phase - 1)];
    prev_epoch = r.epoch;
  }
  boundaries &= epochs_seen == std::array<int, 3>{5, 5, 5};
  for (const auto& p : schedule) boundaries &= fs::exists(dir.path() / "run" / lb::checkpoint_name(p.phase, p.last_epoch));
  return {five && frozen && recompose <= kCompositionTol && boundaries,
          fmt("5/5/5 schedule %s; encoder bit-identical across phase 3: %s; max log recomposition error %.3g (<= %g); "
              "%zu rows, phase boundaries respected: %s",
              five ? "yes" : "no", frozen ? "yes" : "no", recompose, kCompositionTol, rows.size(), boundaries ? "yes" : "no")};
}

// Overfit run settings: phase 1 only, no augmentation, checked every epoch.
constexpr int kOverfitMaxEpochs = 200;
constexpr double kOverfitLr = 1e-3;
constexpr int kOverfitBatch = 4;

Outcome criterion7() {
  const auto t0 = Clock::now();
  ScratchDir dir("c7");
  lb::RunConfig c;
  c.augment.enabled = false;
  c.schedule.lr = kOverfitLr;
  c.schedule.batch_size = kOverfitBatch;
  c.distill.enabled = false;
  c.seed = 7;
  lb::SynthSpec spec;
  spec.count = 16;
  spec.canvas = 128;
  spec.seed = 70;
  const auto data = lb::generate_synthetic(spec);
  lb::UNetStudent<float> m(c.student_config());
  lb::Trainer<float> tr(c, m, dir.path());
  std::ofstream(tr.log_path()) << lb::kLogHeader << '\n';
  double mdice = 0.0;
  tr.on_epoch_end([&](int, int) {
    mdice = lb::evaluate(m, data).report.mdice;
    return mdice < kOverfitTarget;
  });
  auto phase = lb::make_schedule(c)[0];
  phase.last_epoch = kOverfitMaxEpochs;
  const auto state = tr.run_phase(phase, data, nullptr);
  const double t = seconds_since(t0);
  return {mdice >= kOverfitTarget && t < kBudget7,
          fmt("16 samples at 128x128, phase 1: train mDice %.4f (>= %g) after %d epochs (<= %d); %.0f s (< %g s)", mdice,
              kOverfitTarget, state.epoch, kOverfitMaxEpochs, t, kBudget7)};
}

// Distillation comparison settings. Each seed draws its own corpus and
// initialisation, so the mean covers both sources of variance.
constexpr int kCompareSeeds = 3;
constexpr double kCompareScale = 1.0 / 8.0;
constexpr double kCompareLr = 1e-3;
constexpr int kCompareCanvas = 64;
constexpr double kCompareContrast = 0.2;
constexpr double kCompareNoise = 3.0;

Outcome criterion8() {
  const auto t0 = Clock::now();
  ScratchDir dir("c8");
  lb::RunConfig base;
  base.schedule.scale = kCompareScale;
  base.schedule.lr = kCompareLr;
  const auto bank = lb::teach::make_mock_bank(base.teachers.bank, base.teachers.seed);

  double dice[2] = {0, 0}, band[2] = {0, 0};
  std::string per_seed;
  for (int s = 0; s < kCompareSeeds; ++s) {
    lb::SynthSpec train_spec;
    train_spec.count = 200;
    train_spec.canvas = kCompareCanvas;
    train_spec.contrast = kCompareContrast;
    train_spec.boundary_noise = kCompareNoise;
    train_spec.seed = 800 + 10 * static_cast<std::uint64_t>(s);
    train_spec.id_prefix = "train";
    lb::SynthSpec test_spec = train_spec;
    test_spec.count = 50;
    test_spec.seed = train_spec.seed + 1;
    test_spec.id_prefix = "test";
    const auto train = lb::generate_synthetic(train_spec);
    const auto test = lb::generate_synthetic(test_spec);
    const fs::path seed_dir = dir.path() / ("seed" + std::to_string(s));
    lb::precompute_cache(bank, train, seed_dir / "cache", cache_options(base));
    const auto targets = lb::load_targets<float>(seed_dir / "cache", train, bank, cache_options(base));

    for (int distill = 0; distill < 2; ++distill) {
      lb::RunConfig c = base;
      c.seed = static_cast<std::uint64_t>(s);
      c.distill.enabled = distill == 1;
      lb::UNetStudent<float> m(c.student_config());
      lb::Trainer<float> tr(c, m, seed_dir / (distill ? "full" : "base"));
      tr.train(train, distill ? &targets : nullptr);
      const auto e = lb::evaluate(m, test);
      dice[distill] += e.report.mdice / kCompareSeeds;
      band[distill] += e.boundary_band_dice / kCompareSeeds;
      per_seed += fmt(" [seed %d %s: mDice %.4f band %.4f]", s, distill ? "full" : "base", e.report.mdice,
                      e.boundary_band_dice);
    }
  }
  const double t = seconds_since(t0);
  const double gain = band[1] - band[0];
  return {dice[1] >= dice[0] && gain >= kBandGainTarget && t < kBudget8,
          fmt("mean over %d seeds: mDice full %.4f vs baseline %.4f; boundary-band mDice full %.4f vs baseline %.4f "
              "(gain %+.4f, need >= %g); %.0f s (< %g s);",
              kCompareSeeds, dice[1], dice[0], band[1], band[0], gain, kBandGainTarget, t, kBudget8) +
              per_seed};
}

Outcome criterion9() {
  ScratchDir dir("c9");
  lb::SynthSpec spec;
  spec.count = 100;
  spec.canvas = 64;
  spec.seed = 900;
  const auto data = lb::generate_synthetic(spec);
  const auto bank = lb::teach::make_mock_bank();
  long long split_violations = 0, teacher_violations = 0, cache_mismatches = 0;
  for (const auto& s : data) {
    const auto r = lb::region_split(s);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x) {
          const float m = s.mask(0, y, x), v = s.image(c, y, x);
          const float a = r.polyp_input(c, y, x), b = r.nonpolyp_input(c, y, x);
          split_violations += a + b != v || (m == 1.0f ? b != 0.0f || a != v : a != 0.0f || b != v);
        }
    const auto [lh, lw] = lb::latent_size_for(s.height(), s.width());
    const auto sem = lb::teach::extract_semantic(bank, s.image, lh, lw);
    const auto bnd = lb::teach::extract_boundary(bank, s, lh, lw);
    teacher_violations += sem.features.shape() != lb::Shape{bank.total_channels(), lh, lw} ||
                          bnd.features.shape() != sem.features.shape() || !lb::all_finite(sem.features) ||
                          !lb::all_finite(bnd.features);
    const auto target = lb::teach::project_targets(sem, bnd, 64, 1);
    lb::teach::cache_write(dir.path(), s.id, target, bank.fingerprint());
    const auto back = lb::teach::cache_read(dir.path(), s.id, bank.fingerprint());
    cache_mismatches += !(back.semantic == target.semantic) || !(back.boundary == target.boundary) ||
                        back.projection_seed != target.projection_seed;
  }
  return {split_violations == 0 && teacher_violations == 0 && cache_mismatches == 0,
          fmt("100 samples: region-split violations %lld, teacher shape/finiteness violations %lld, "
              "cache read-after-write mismatches %lld",
              split_violations, teacher_violations, cache_mismatches)};
}

Outcome criterion10() {
  ScratchDir dir("c10");
  lb::RunConfig c;
  c.precision = "double";
  c.threads = 1;
  c.schedule.scale = 1.0 / 8.0;
  c.seed = 10;
  Eigen::setNbThreads(1);
  lb::SynthSpec spec;
  spec.count = 8;
  spec.canvas = 64;
  spec.seed = 100;
  const auto data = lb::generate_synthetic(spec);
  const auto bank = lb::teach::make_mock_bank(c.teachers.bank, c.teachers.seed);
  std::string logs[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path run_dir = dir.path() / ("run" + std::to_string(run));
    lb::precompute_cache(bank, data, run_dir / "cache", cache_options(c));
    const auto targets = lb::load_targets<double>(run_dir / "cache", data, bank, cache_options(c));
    lb::UNetStudent<double> m(c.student_config());
    lb::Trainer<double> tr(c, m, run_dir);
    tr.train(data, &targets);
    std::ifstream is(tr.log_path(), std::ios::binary);
    logs[run].assign(std::istreambuf_iterator<char>(is), {});
  }
  const auto lines = std::count(logs[0].begin(), logs[0].end(), '\n');
  return {!logs[0].empty() && logs[0] == logs[1],
          fmt("two double-precision single-threaded 5/5/5 runs: training logs %s (%ld lines)",
              logs[0] == logs[1] ? "byte-identical" : "DIFFER", static_cast<long>(lines))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"litebound acceptance criteria"};
  int n = 0;
  app.add_option("--criterion", n, "criterion number")->required()->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::function<Outcome()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                               criterion6, criterion7, criterion8, criterion9, criterion10};
  Outcome o;
  try {
    o = criteria[n - 1]();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << std::endl;
  return o.pass ? 0 : 1;
}
