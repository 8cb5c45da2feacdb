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

#ifndef LITEBOUND_TRAINER_HPP
#define LITEBOUND_TRAINER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "litebound/config.hpp"
#include "litebound/data.hpp"
#include "litebound/error.hpp"
#include "litebound/frequency.hpp"
#include "litebound/log.hpp"
#include "litebound/losses.hpp"
#include "litebound/metrics.hpp"
#include "litebound/optim.hpp"
#include "litebound/resample.hpp"
#include "litebound/student.hpp"
#include "litebound/teachers.hpp"

namespace litebound {

enum class Trainable { all, decoder_and_heads_only };

struct PhaseConfig {
  int phase = 1;
  int first_epoch = 1;
  int last_epoch = 1;
  LossWeights lambdas = kDefaultLambdas;
  Trainable trainable = Trainable::all;
  double lr = 1e-4;
  double lr_decay = 1.0;
  int batch_size = 8;
  bool distill = true;

  PhaseLossSpec loss_spec() const { return {phase, distill, lambdas}; }
  int epochs() const { return last_epoch - first_epoch + 1; }
};

/// Consecutive, disjoint phases built from the run configuration.
inline std::array<PhaseConfig, 3> make_schedule(const RunConfig& c) {
  const auto e = c.scaled_epochs();
  std::array<PhaseConfig, 3> s{};
  int next = 1;
  for (int i = 0; i < 3; ++i) {
    auto& p = s[static_cast<std::size_t>(i)];
    p.phase = i + 1;
    p.first_epoch = next;
    p.last_epoch = next + e[static_cast<std::size_t>(i)] - 1;
    next = p.last_epoch + 1;
    p.lambdas = c.lambda_array();
    p.trainable = i == 2 ? Trainable::decoder_and_heads_only : Trainable::all;
    p.lr = c.schedule.lr;
    p.lr_decay = c.schedule.lr_decay;
    p.batch_size = c.schedule.batch_size;
    p.distill = c.distill.enabled;
  }
  return s;
}

struct RunState {
  int epoch = 0;
  int phase = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path log_path;
  std::uint64_t seed = 0;
  long long steps = 0;
};

// ---------------------------------------------------------------------------
// Seeds. Every random draw is a pure function of (run seed, epoch, sample),
// so resuming at a phase boundary replays the same stream.

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
  return order;
}

// ---------------------------------------------------------------------------

/// Resizes a sample so both sides are multiples of the student stride (nearest multiple, at least 16).
inline ImageSample fit_to_stride(const ImageSample& s) {
  auto fit = [](int n) { return std::max(kStudentStride, static_cast<int>(std::lround(n / double(kStudentStride))) * kStudentStride); };
  const int h = fit(s.height()), w = fit(s.width());
  if (h == s.height() && w == s.width()) return s;
  return {s.id, resize_bilinear(s.image, h, w), binarize(resize_nearest(s.mask, h, w)), s.source};
}

inline std::pair<int, int> latent_size_for(int h, int w) {
  const auto fit = [](int n) { return std::max(kStudentStride, static_cast<int>(std::lround(n / double(kStudentStride))) * kStudentStride); };
  return {fit(h) / kStudentStride, fit(w) / kStudentStride};
}

/// Band-split targets per sample id, at the cached resolution.
template <typename T>
using TargetStore = std::map<std::string, AlignmentTargets<T>>;

struct CacheOptions {
  int width = 64;
  std::uint64_t projection_seed = 1;
  double cutoff_ratio = freq::kDefaultCutoff;
};

/// Reads the cache entry of every sample and routes its bands to L1..L4.
template <typename T>
TargetStore<T> load_targets(const std::filesystem::path& cache_dir, const std::vector<ImageSample>& samples,
                            const teach::TeacherBank& bank, const CacheOptions& opts) {
  const auto fp = bank.fingerprint();
  std::vector<std::string> missing;
  for (const auto& s : samples)
    if (!std::filesystem::exists(teach::cache_path(cache_dir, s.id))) missing.push_back(s.id);
  if (!missing.empty()) {
    std::string msg = "missing cache entries (run `cache` first):";
    for (const auto& id : missing) msg += " " + id;
    throw PrerequisiteError(msg);
  }
  TargetStore<T> store;
  for (const auto& s : samples) {
    const auto t = teach::cache_read(cache_dir, s.id, fp);
    if (t.semantic.channels() != opts.width || t.projection_seed != opts.projection_seed)
      throw StaleCacheError("cache entry for " + s.id + " has width " + std::to_string(t.semantic.channels()) +
                            " / projection seed " + std::to_string(t.projection_seed) + "; expected " +
                            std::to_string(opts.width) + " / " + std::to_string(opts.projection_seed));
    const auto masks = freq::make_masks(t.semantic.height(), t.semantic.width(), opts.cutoff_ratio);
    auto routed = assemble_targets(t.semantic.cast<double>(), t.boundary.cast<double>(), masks);
    AlignmentTargets<T> cast;
    for (std::size_t k = 0; k < 4; ++k) cast.target[k] = routed.target[k].template cast<T>();
    store.emplace(s.id, std::move(cast));
  }
  return store;
}

struct CacheSummary {
  int computed = 0;
  int skipped = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // (sample id, message)
};

/// Computes teacher targets for every sample; entries that already match the
/// bank fingerprint, width, projection seed and size are left untouched.
inline CacheSummary precompute_cache(const teach::TeacherBank& bank, const std::vector<ImageSample>& samples,
                                     const std::filesystem::path& cache_dir, const CacheOptions& opts) {
  const auto fp = bank.fingerprint();
  CacheSummary summary;
  for (const auto& s : samples) {
    const auto [lh, lw] = latent_size_for(s.height(), s.width());
    const auto path = teach::cache_path(cache_dir, s.id);
    if (std::filesystem::exists(path)) {
      try {
        const auto h = teach::cache_read_header(path);
        if (h.fingerprint == fp && h.depth == static_cast<std::uint32_t>(opts.width) &&
            h.projection_seed == opts.projection_seed && h.height == static_cast<std::uint32_t>(lh) &&
            h.width == static_cast<std::uint32_t>(lw)) {
          ++summary.skipped;
          continue;
        }
      } catch (const FormatError&) {
        // unreadable entry: recompute
      }
    }
    try {
      const ImageSample fitted = fit_to_stride(s);
      const auto semantic = teach::extract_semantic(bank, fitted.image, lh, lw);
      const auto boundary = teach::extract_boundary(bank, fitted, lh, lw);
      teach::cache_write(cache_dir, s.id, teach::project_targets(semantic, boundary, opts.width, opts.projection_seed), fp);
      ++summary.computed;
    } catch (const std::exception& e) {
      summary.failures.emplace_back(s.id, e.what());
    }
  }
  return summary;
}

/// Applies an augmentation's geometry to band targets: flips, then bilinear resize to the latent grid.
template <typename T>
AlignmentTargets<T> transform_targets(const AlignmentTargets<T>& t, const AugmentPlan& plan, int h, int w) {
  AlignmentTargets<T> out;
  for (std::size_t k = 0; k < 4; ++k) out.target[k] = resize_bilinear(apply_flips(t.target[k], plan), h, w);
  return out;
}

// ---------------------------------------------------------------------------

inline constexpr const char* kLogHeader = "epoch,phase,bce,dice,l1,l2,l3,l4,total";

struct LogRow {
  int epoch = 0;
  int phase = 0;
  LossBreakdown loss;
};

inline std::string format_log_row(const LogRow& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.epoch, r.phase, r.loss.bce,
                r.loss.dice, r.loss.align[0], r.loss.align[1], r.loss.align[2], r.loss.align[3], r.loss.total);
  return buf;
}

inline std::vector<LogRow> read_log(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw PrerequisiteError("training log not found: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kLogHeader) throw FormatError("unexpected log header in " + path.string());
  std::vector<LogRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    LogRow r;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.epoch, &r.phase, &r.loss.bce, &r.loss.dice,
                    &r.loss.align[0], &r.loss.align[1], &r.loss.align[2], &r.loss.align[3], &r.loss.total) != 9)
      throw FormatError("malformed log row: " + line);
    rows.push_back(r);
  }
  return rows;
}

/// Three-phase trainer. One optimizer per phase (state reset at boundaries).
template <typename T>
class Trainer {
public:
  using StepCallback = std::function<void(const LogRow&)>;
  /// Called after each epoch; returning false ends the phase at that epoch.
  using EpochCallback = std::function<bool(int phase, int epoch)>;

  Trainer(RunConfig config, Backbone<T>& model, std::filesystem::path run_dir)
      : config_(std::move(config)), model_(model), run_dir_(std::move(run_dir)) {}

  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }
  std::filesystem::path log_path() const { return run_dir_ / "train_log.csv"; }
  void on_step(StepCallback cb) { on_step_ = std::move(cb); }
  void on_epoch_end(EpochCallback cb) { on_epoch_ = std::move(cb); }

  /// Runs one phase over `data`. Phases 2-3 with distillation need `targets`.
  RunState run_phase(const PhaseConfig& pc, const std::vector<ImageSample>& data, const TargetStore<T>* targets) {
    if (data.empty()) throw ConfigError("training set is empty");
    const PhaseLossSpec spec = pc.loss_spec();
    if (spec.uses_alignment()) {
      if (!targets) throw PrerequisiteError("phase " + std::to_string(pc.phase) + " needs teacher targets (run `cache` first)");
      std::string missing;
      for (const auto& s : data)
        if (!targets->contains(s.id)) missing += " " + s.id;
      if (!missing.empty()) throw PrerequisiteError("missing cache entries:" + missing);
    }
    if (pc.phase >= 2) {
      const auto prev = run_dir_ / checkpoint_name(pc.phase - 1, pc.first_epoch - 1);
      if (!std::filesystem::exists(prev))
        throw PrerequisiteError("phase " + std::to_string(pc.phase) + " requires checkpoint " + prev.string());
    }

    auto params = pc.trainable == Trainable::all ? model_.all_parameters() : trainable_without_encoder();
    nn::Adam<T> opt(params, {pc.lr});
    if (pc.trainable == Trainable::decoder_and_heads_only)
      for (auto* p : model_.parameters(ParamGroup::encoder))
        if (opt.manages(p)) throw Error("encoder parameter " + p->name + " is still trainable in phase 3");

    std::ofstream log(log_path(), std::ios::app);
    if (!log) throw Error("cannot open training log " + log_path().string());

    RunState state;
    state.phase = pc.phase;
    state.seed = config_.seed;
    state.log_path = log_path();
    const std::size_t batch = static_cast<std::size_t>(pc.batch_size);
    for (int epoch = pc.first_epoch; epoch <= pc.last_epoch; ++epoch) {
      opt.set_lr(pc.lr * std::pow(pc.lr_decay, epoch - pc.first_epoch));
      const auto order = epoch_order(data.size(), config_.seed, epoch);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(order.size(), start + batch);
        opt.zero_grad();
        LossBreakdown sum;
        std::vector<std::string> ids;
        const T inv = static_cast<T>(1.0 / static_cast<double>(end - start));
        for (std::size_t b = start; b < end; ++b) {
          const ImageSample& raw = data[order[b]];
          ids.push_back(raw.id);
          const std::uint64_t aug_seed = mix_seed(mix_seed(config_.seed, static_cast<std::uint64_t>(epoch)), order[b]);
          const AugmentPlan plan = config_.augment.enabled ? plan_augment(aug_seed) : AugmentPlan{};
          const ImageSample s = fit_to_stride(apply_augment(raw, plan));
          const Tensor<T> image = s.image.template cast<T>();
          const Tensor<T> gt = s.mask.template cast<T>();

          auto out = model_.forward(image);
          std::optional<AlignmentTargets<T>> tgt;
          if (spec.uses_alignment())
            tgt = transform_targets(targets->at(raw.id), plan, out.latents[0].height(), out.latents[0].width());
          auto loss = phase_loss(spec, out.prediction, gt, out.latents, tgt ? &*tgt : nullptr);
          loss.grad_logits *= inv;
          for (auto& g : loss.grad_latents.l)
            if (!g.empty()) g *= inv;
          model_.backward(loss.grad_logits, loss.grad_latents);

          sum.bce += loss.breakdown.bce;
          sum.dice += loss.breakdown.dice;
          for (std::size_t k = 0; k < 4; ++k) sum.align[k] += loss.breakdown.align[k];
          sum.total += loss.breakdown.total;
        }
        const double n = static_cast<double>(end - start);
        LogRow row{epoch, pc.phase, sum};
        row.loss.bce /= n;
        row.loss.dice /= n;
        for (auto& a : row.loss.align) a /= n;
        row.loss.total /= n;
        if (!std::isfinite(row.loss.total)) dump_and_abort(row, ids);
        opt.step();
        log << format_log_row(row) << '\n';
        ++state.steps;
        if (on_step_) on_step_(row);
      }
      log.flush();
      state.epoch = epoch;
      if (on_epoch_ && !on_epoch_(pc.phase, epoch)) break;
    }
    state.checkpoint = run_dir_ / checkpoint_name(pc.phase, state.epoch);
    save_checkpoint(state.checkpoint, model_, model_fingerprint(config_));
    return state;
  }

  /// Runs phases start_phase..3. Starting later restores the previous phase's checkpoint.
  RunState train(const std::vector<ImageSample>& data, const TargetStore<T>* targets, int start_phase = 1) {
    std::filesystem::create_directories(run_dir_);
    const auto schedule = make_schedule(config_);
    if (start_phase < 1 || start_phase > 3) throw ConfigError("start phase must be 1, 2 or 3");
    if (start_phase == 1) {
      std::ofstream(log_path(), std::ios::trunc) << kLogHeader << '\n';
    } else {
      const auto& prev = schedule[static_cast<std::size_t>(start_phase - 2)];
      const auto ckpt = run_dir_ / checkpoint_name(prev.phase, prev.last_epoch);
      if (!std::filesystem::exists(ckpt)) throw PrerequisiteError("cannot resume: missing " + ckpt.string());
      load_checkpoint(ckpt, model_);
      truncate_log_after(prev.last_epoch);
    }
    RunState state;
    for (int p = start_phase; p <= 3; ++p) state = run_phase(schedule[static_cast<std::size_t>(p - 1)], data, targets);
    return state;
  }

private:
  std::vector<nn::Parameter<T>*> trainable_without_encoder() {
    auto p = model_.parameters(ParamGroup::heads);
    auto d = model_.parameters(ParamGroup::decoder);
    p.insert(p.end(), d.begin(), d.end());
    return p;
  }

  void truncate_log_after(int last_epoch) {
    if (!std::filesystem::exists(log_path())) {
      std::ofstream(log_path()) << kLogHeader << '\n';
      return;
    }
    auto rows = read_log(log_path());
    std::ofstream os(log_path(), std::ios::trunc);
    os << kLogHeader << '\n';
    for (const auto& r : rows)
      if (r.epoch <= last_epoch) os << format_log_row(r) << '\n';
  }

  [[noreturn]] void dump_and_abort(const LogRow& row, const std::vector<std::string>& ids) {
    const auto path = run_dir_ / ("diagnostic_phase" + std::to_string(row.phase) + "_epoch" + std::to_string(row.epoch) + ".txt");
    std::ofstream os(path);
    os << "non-finite loss\n" << kLogHeader << '\n' << format_log_row(row) << "\nbatch:";
    for (const auto& id : ids) os << ' ' << id;
    os << '\n';
    throw NumericError("non-finite loss in phase " + std::to_string(row.phase) + " epoch " + std::to_string(row.epoch) +
                       "; diagnostics in " + path.string());
  }

  RunConfig config_;
  Backbone<T>& model_;
  std::filesystem::path run_dir_;
  StepCallback on_step_;
  EpochCallback on_epoch_;
};

// ---------------------------------------------------------------------------

/// Probability map at the sample's native resolution.
template <typename T>
Tensor<float> predict_probability(const Backbone<T>& model, const Tensor<float>& image) {
  const int h = image.height(), w = image.width();
  const auto fit = [](int n) { return std::max(kStudentStride, static_cast<int>(std::lround(n / double(kStudentStride))) * kStudentStride); };
  const Tensor<float> in = resize_bilinear(image, fit(h), fit(w));
  Tensor<float> p = model.infer(in.cast<T>()).prediction.probability.template cast<float>();
  if (p.height() != h || p.width() != w) p = resize_bilinear(p, h, w);
  for (auto& v : p) v = std::clamp(v, 0.0f, 1.0f);
  return p;
}

struct Evaluation {
  metrics::MetricReport report;
  double boundary_band_dice = 0.0;  // mean over samples, 3-pixel tube
};

/// Scores the model on every sample at native resolution.
template <typename T>
Evaluation evaluate(const Backbone<T>& model, const std::vector<ImageSample>& data) {
  if (data.empty()) throw ConfigError("cannot evaluate on an empty dataset");
  std::vector<metrics::MetricRow> rows;
  double band = 0.0;
  for (const auto& s : data) {
    const Tensor<float> p = predict_probability(model, s.image);
    rows.push_back(metrics::score_sample(s.id, p, s.mask));
    band += metrics::boundary_band_dice(p, s.mask);
  }
  return {metrics::aggregate(std::move(rows)), band / static_cast<double>(data.size())};
}

}  // namespace litebound

#endif  // LITEBOUND_TRAINER_HPP
