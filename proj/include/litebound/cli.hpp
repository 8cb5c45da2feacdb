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


#ifndef LITEBOUND_CLI_HPP
#define LITEBOUND_CLI_HPP

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "litebound/config.hpp"
#include "litebound/data.hpp"
#include "litebound/error.hpp"
#include "litebound/image_io.hpp"
#include "litebound/log.hpp"
#include "litebound/metrics.hpp"
#include "litebound/student.hpp"
#include "litebound/teachers.hpp"
#include "litebound/trainer.hpp"

namespace litebound::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2 };

inline constexpr const char* kRunConfigFile = "config.json";
inline constexpr const char* kCacheDir = "cache";

/// Options shared by the run-directory commands.
struct RunOptions {
  std::string out;
  std::string config;
  std::vector<std::string> overrides;
  bool force = false;
};

/// Config file first, then `--set` overrides. Without `--config` the run
/// directory's saved config is used when present.
inline RunConfig resolve_config(const RunOptions& o) {
  fs::path path = o.config;
  if (path.empty() && fs::exists(fs::path(o.out) / kRunConfigFile)) path = fs::path(o.out) / kRunConfigFile;
  RunConfig c = load_config(path, o.overrides);
  Eigen::setNbThreads(c.threads);
  return c;
}

inline void require_data_root(const RunConfig& c) {
  if (c.data.root.empty()) throw ConfigValidationError({"data.root"});
}

inline teach::TeacherBank bank_for(const RunConfig& c) { return teach::make_mock_bank(c.teachers.bank, c.teachers.seed); }

inline CacheOptions cache_options_for(const RunConfig& c) {
  return {c.distill.width, c.distill.projection_seed, c.distill.cutoff_ratio};
}

inline bool non_empty_dir(const fs::path& p) { return fs::is_directory(p) && !fs::is_empty(p); }

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string out;
  int count = 200;
  int test_count = 50;
  int canvas = 128;
  int blob_min = 1;
  int blob_max = 3;
  double noise = 2.0;
  double contrast = 0.35;
  std::uint64_t seed = 0;
  bool force = false;
};

inline int cmd_synth(const SynthOptions& o) {
  const fs::path root = o.out;
  if (non_empty_dir(root) && !o.force)
    throw ConfigError("refusing to write into non-empty " + root.string() + " (pass --force to replace)");
  SynthSpec train;
  train.count = o.count;
  train.canvas = o.canvas;
  train.blob_min = o.blob_min;
  train.blob_max = o.blob_max;
  train.boundary_noise = o.noise;
  train.contrast = o.contrast;
  train.seed = o.seed;
  train.id_prefix = "train";
  SynthSpec test = train;
  test.count = o.test_count;
  test.seed = mix_seed(o.seed, 0x7e57);
  test.id_prefix = "test";
  train.validate();
  test.validate();
  for (const char* leaf : {"train", "test", kSynthProvenanceFile}) fs::remove_all(root / leaf);
  write_synthetic_dataset(root, train, test);
  log::info("wrote " + std::to_string(o.count) + " train / " + std::to_string(o.test_count) + " test samples to " +
            root.string());
  return kOk;
}

inline int cmd_cache(const RunOptions& o) {
  const RunConfig c = resolve_config(o);
  require_data_root(c);
  const fs::path dir = fs::path(o.out) / kCacheDir;
  if (o.force) fs::remove_all(dir);
  save_config(fs::path(o.out) / kRunConfigFile, c);
  const auto data = load_dataset(c.data.root, Split::train);
  const auto s = precompute_cache(bank_for(c), data, dir, cache_options_for(c));
  for (const auto& [id, msg] : s.failures) log::warn("cache: " + id + ": " + msg);
  log::info("cache: " + std::to_string(s.computed) + " computed, " + std::to_string(s.skipped) + " up to date, " +
            std::to_string(s.failures.size()) + " failed");
  return s.failures.empty() ? kOk : kRuntime;
}

template <typename T>
void train_as(const RunConfig& c, const fs::path& out, int start_phase) {
  const auto data = load_dataset(c.data.root, Split::train);
  std::optional<TargetStore<T>> targets;
  if (c.distill.enabled) targets = load_targets<T>(out / kCacheDir, data, bank_for(c), cache_options_for(c));
  UNetStudent<T> model(c.student_config());
  Trainer<T> trainer(c, model, out);
  trainer.on_step([last = 0](const LogRow& r) mutable {
    if (r.epoch == last) return;
    last = r.epoch;
    char buf[160];
    std::snprintf(buf, sizeof buf, "phase %d epoch %d total %.5f", r.phase, r.epoch, r.loss.total);
    log::info(buf);
  });
  const auto state = trainer.train(data, targets ? &*targets : nullptr, start_phase);
  log::info("final checkpoint " + state.checkpoint.string());
}

inline int cmd_train(RunOptions o, bool no_distill, int start_phase) {
  if (no_distill) o.overrides.push_back("distill.enabled=false");
  const RunConfig c = resolve_config(o);
  require_data_root(c);
  const fs::path out = o.out;
  if (start_phase == 1 && fs::exists(out / "train_log.csv") && !o.force)
    throw ConfigError("run directory " + out.string() + " already holds a training log (pass --force to retrain)");
  save_config(out / kRunConfigFile, c);
  if (c.precision == "double")
    train_as<double>(c, out, start_phase);
  else
    train_as<float>(c, out, start_phase);
  return kOk;
}

/// Latest phase checkpoint of the configured schedule.
inline fs::path final_checkpoint(const RunConfig& c, const fs::path& out) {
  const auto schedule = make_schedule(c);
  for (int p = 2; p >= 0; --p) {
    const auto path = out / checkpoint_name(schedule[static_cast<std::size_t>(p)].phase,
                                            schedule[static_cast<std::size_t>(p)].last_epoch);
    if (fs::exists(path)) {
      if (p < 2) log::warn("using incomplete run checkpoint " + path.string());
      return path;
    }
  }
  throw PrerequisiteError("no checkpoint in " + out.string() + " (run `train` first)");
}

template <typename T>
UNetStudent<T> restore_model(const RunConfig& c, const fs::path& out) {
  UNetStudent<T> model(c.student_config());
  const auto path = final_checkpoint(c, out);
  const auto fp = load_checkpoint(path, model);
  if (fp != model_fingerprint(c)) throw ConfigError("checkpoint " + path.string() + " was trained with " + fp);
  return model;
}

inline fs::path report_path(const fs::path& out, Split split) {
  return out / ("eval_" + std::string(to_string(split)) + ".csv");
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ConfigValidationError({"--split"});
}

template <typename T>
Evaluation eval_as(const RunConfig& c, const fs::path& out, Split split) {
  const auto model = restore_model<T>(c, out);
  return evaluate(model, load_dataset(c.data.root, split));
}

inline int cmd_eval(const RunOptions& o, const std::string& split_name) {
  const RunConfig c = resolve_config(o);
  require_data_root(c);
  const Split split = parse_split(split_name);
  const fs::path out = o.out;
  const Evaluation e = c.precision == "double" ? eval_as<double>(c, out, split) : eval_as<float>(c, out, split);
  metrics::write_report_csv(report_path(out, split), e.report);
  char band[96];
  std::snprintf(band, sizeof band, "boundary_band_dice=%.6f\n", e.boundary_band_dice);
  const std::string text = metrics::summary(e.report, std::string("split: ") + to_string(split)) + band;
  std::ofstream(out / ("eval_" + std::string(to_string(split)) + ".txt")) << text;
  std::cout << text;
  return kOk;
}

/// Input image with the 0.5-level contour of `prob` painted red.
inline Tensor<float> contour_overlay(const Tensor<float>& image, const Tensor<float>& prob) {
  Tensor<float> out = image.channels() == 3 ? image : concat_channels({&image, &image, &image});
  const int h = prob.height(), w = prob.width();
  auto inside = [&](int y, int x) { return prob(0, y, x) >= 0.5f; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!inside(y, x)) continue;
      const bool edge = y == 0 || x == 0 || y == h - 1 || x == w - 1 || !inside(y - 1, x) || !inside(y + 1, x) ||
                        !inside(y, x - 1) || !inside(y, x + 1);
      if (!edge) continue;
      out(0, y, x) = 1.0f;
      out(1, y, x) = 0.0f;
      out(2, y, x) = 0.0f;
    }
  return out;
}

template <typename T>
int predict_as(const RunConfig& c, const fs::path& out, const fs::path& input, bool overlay) {
  const auto model = restore_model<T>(c, out);
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(input))
    if (e.is_regular_file() && detail::has_extension(e.path(), {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}))
      images.push_back(e.path());
  if (images.empty()) throw PrerequisiteError("no images in " + input.string());
  std::sort(images.begin(), images.end());
  for (const auto& path : images) {
    const auto image = io::read_rgb(path);
    const auto prob = predict_probability(model, image);
    const std::string stem = path.stem().string();
    io::write_png(out / "predictions" / (stem + ".png"), prob);
    if (overlay) io::write_png(out / "overlays" / (stem + ".png"), contour_overlay(image, prob));
  }
  log::info("wrote " + std::to_string(images.size()) + " predictions to " + (out / "predictions").string());
  return kOk;
}

inline int cmd_predict(const RunOptions& o, const std::string& input, bool overlay) {
  const RunConfig c = resolve_config(o);
  fs::path in = input;
  if (in.empty()) {
    require_data_root(c);
    in = split_directory(c.data.root, Split::test) / "images";
  }
  if (!fs::is_directory(in)) throw PrerequisiteError("input directory " + in.string() + " does not exist");
  return c.precision == "double" ? predict_as<double>(c, o.out, in, overlay) : predict_as<float>(c, o.out, in, overlay);
}

inline int cmd_report(const std::string& out, const std::string& split_name) {
  const Split split = parse_split(split_name);
  const auto r = metrics::read_report_csv(report_path(out, split));
  std::cout << metrics::summary(r, std::string("split: ") + to_string(split));
  return kOk;
}

// ---------------------------------------------------------------------------

/// Parses arguments and dispatches. Returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"litebound: boundary-guided distillation for binary segmentation"};
  app.require_subcommand(1);

  auto add_out = [](CLI::App* sub, std::string& out) {
    sub->add_option("--out", out, "run or dataset directory (default: $LITEBOUND_OUT)")->envname("LITEBOUND_OUT")->required();
  };
  auto add_run = [&](CLI::App* sub, RunOptions& o) {
    add_out(sub, o.out);
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--set", o.overrides, "override a config key: dotted.key=value");
  };

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "generate a synthetic train/test corpus");
  add_out(synth, so.out);
  synth->add_option("--count", so.count, "train samples");
  synth->add_option("--test-count", so.test_count, "test samples");
  synth->add_option("--canvas", so.canvas, "image side in pixels");
  synth->add_option("--blob-min", so.blob_min);
  synth->add_option("--blob-max", so.blob_max);
  synth->add_option("--noise", so.noise, "boundary noise amplitude in pixels");
  synth->add_option("--contrast", so.contrast, "foreground/background colour separation in (0,1]");
  synth->add_option("--seed", so.seed);
  synth->add_flag("--force", so.force, "replace an existing corpus");

  RunOptions co;
  auto* cache = app.add_subcommand("cache", "precompute teacher targets for the train split");
  add_run(cache, co);
  cache->add_flag("--force", co.force, "discard and recompute every entry");

  RunOptions to;
  bool no_distill = false;
  int start_phase = 1;
  auto* train = app.add_subcommand("train", "run the three-phase schedule");
  add_run(train, to);
  train->add_flag("--no-distill", no_distill, "segmentation loss only in every phase");
  train->add_option("--resume-phase", start_phase, "start at this phase from the previous phase's checkpoint")
      ->check(CLI::Range(1, 3));
  train->add_flag("--force", to.force, "overwrite an existing run");

  RunOptions eo;
  std::string eval_split = "test";
  auto* eval = app.add_subcommand("eval", "score the final checkpoint");
  add_run(eval, eo);
  eval->add_option("--split", eval_split, "train or test");

  RunOptions po;
  std::string input;
  bool overlay = false;
  auto* predict = app.add_subcommand("predict", "write probability masks for a directory of images");
  add_run(predict, po);
  predict->add_option("--input", input, "image directory (default: the test split)");
  predict->add_flag("--overlay", overlay, "also write red 0.5-contour overlays");

  std::string report_out, report_split = "test";
  auto* report = app.add_subcommand("report", "print the summary of a saved evaluation");
  add_out(report, report_out);
  report->add_option("--split", report_split, "train or test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(so);
    if (*cache) return cmd_cache(co);
    if (*train) return cmd_train(to, no_distill, start_phase);
    if (*eval) return cmd_eval(eo, eval_split);
    if (*predict) return cmd_predict(po, input, overlay);
    if (*report) return cmd_report(report_out, report_split);
  } catch (const PrerequisiteError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace litebound::cli

#endif  // LITEBOUND_CLI_HPP
