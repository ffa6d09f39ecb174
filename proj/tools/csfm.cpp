// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, sr, eval, sweep, analyze-gf, mean, synth,
// params. Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "csfm/csfm.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> iterations;
  std::string output;
  std::string resume;
};

csfm::TrainConfig load_train_config(const TrainArgs& a) {
  csfm::TrainConfig cfg = csfm::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.iterations) cfg.iterations = *a.iterations;
  if (!a.output.empty()) cfg.output_dir = a.output;
  // Relative dataset paths are resolved against the config file location.
  const fs::path base = fs::path(a.config).parent_path();
  auto resolve = [&base](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(cfg.train_dir);
  resolve(cfg.eval_dir);
  cfg.validate();
  return cfg;
}

/// Trains one configuration, writing log, config and checkpoints to its
/// output directory. Returns the result so callers can inspect divergence.
csfm::TrainResult run_training(const csfm::TrainConfig& cfg, const std::optional<csfm::Checkpoint>& resume) {
  if (cfg.train_dir.empty()) throw csfm::ConfigError("train_dir is not set");
  const auto data = csfm::Dataset::from_directory(cfg.train_dir, cfg.model.scale, cfg.patch_size);
  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  {
    std::ofstream c(out / "config.cfg");
    c << csfm::serialize_config(cfg);
  }
  std::ofstream log(out / "train.log", resume ? std::ios::app : std::ios::trunc);
  csfm::TrainHooks hooks;
  hooks.log = &log;
  hooks.on_checkpoint = [&out](const csfm::Checkpoint& ck) {
    csfm::save_checkpoint(out / ("step_" + std::to_string(ck.optim->step) + ".ckpt"), ck);
  };
  auto result = csfm::train(cfg, data, resume, hooks);
  csfm::save_checkpoint(out / "final.ckpt", result.checkpoint);
  return result;
}

std::vector<csfm::NamedImage> eval_images(const csfm::TrainConfig& cfg) {
  return csfm::load_png_dir(cfg.eval_dir.empty() ? cfg.train_dir : cfg.eval_dir);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"CSFM single-image super-resolution"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train a network from a config file");
  train->add_option("--config", targs.config, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", targs.seed, "Override the config seed");
  train->add_option("--iterations", targs.iterations, "Override the iteration count");
  train->add_option("--output", targs.output, "Override the output directory");
  train->add_option("--resume", targs.resume, "Resume from a checkpoint")->check(CLI::ExistingFile);

  std::string sr_ckpt, sr_in, sr_out;
  int sr_scale = 0;
  auto* sr = app.add_subcommand("sr", "Super-resolve one PNG");
  sr->add_option("--checkpoint", sr_ckpt)->required()->check(CLI::ExistingFile);
  sr->add_option("--input", sr_in)->required()->check(CLI::ExistingFile);
  sr->add_option("--output", sr_out)->required();
  sr->add_option("--scale", sr_scale, "Expected scale; must match the checkpoint");

  std::string ev_ckpt, ev_dir;
  bool ev_bicubic = false;
  int ev_scale = 0;
  std::optional<int> ev_crop;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint or the bicubic baseline on a PNG directory");
  auto* ev_ck_opt = eval->add_option("--checkpoint", ev_ckpt)->check(CLI::ExistingFile);
  auto* ev_bi_opt = eval->add_flag("--bicubic", ev_bicubic, "Bicubic baseline instead of a network");
  ev_ck_opt->excludes(ev_bi_opt);
  eval->add_option("--dataset", ev_dir, "Directory of HR PNG images")->required();
  eval->add_option("--scale", ev_scale, "Scale factor (defaults to the checkpoint's)");
  eval->add_option("--crop", ev_crop, "Border pixels removed before scoring (default: scale)");

  TrainArgs sw_args;
  std::vector<int> sw_modules, sw_blocks;
  auto* sweep = app.add_subcommand("sweep", "Train and score a grid of module/block counts");
  sweep->add_option("--config", sw_args.config)->required()->check(CLI::ExistingFile);
  sweep->add_option("--modules", sw_modules)->required()->delimiter(',');
  sweep->add_option("--blocks", sw_blocks)->required()->delimiter(',');
  sweep->add_option("--output", sw_args.output, "Root directory for per-cell runs");
  sweep->add_option("--seed", sw_args.seed);

  std::string gf_ckpt;
  auto* gf = app.add_subcommand("analyze-gf", "Gated-fusion weight-norm report");
  gf->add_option("--checkpoint", gf_ckpt)->required()->check(CLI::ExistingFile);

  std::string mean_dir;
  auto* mean = app.add_subcommand("mean", "Per-channel RGB mean of a PNG directory");
  mean->add_option("--dataset", mean_dir)->required();

  std::string syn_out;
  int syn_count = 8, syn_w = 96, syn_h = 96;
  std::uint64_t syn_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write procedural test images");
  synth->add_option("--output", syn_out)->required();
  synth->add_option("--count", syn_count);
  synth->add_option("--width", syn_w);
  synth->add_option("--height", syn_h);
  synth->add_option("--seed", syn_seed);

  std::string pc_config;
  auto* params = app.add_subcommand("params", "Analytic parameter count of a config");
  params->add_option("--config", pc_config)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*train) {
    const auto cfg = load_train_config(targs);
    std::optional<csfm::Checkpoint> resume;
    if (!targs.resume.empty()) resume = csfm::load_checkpoint(targs.resume);
    const auto result = run_training(cfg, resume);
    std::cout << "wrote " << (fs::path(cfg.output_dir) / "final.ckpt").string() << " ("
              << result.checkpoint.scalar_count() << " parameters)\n";
    if (result.diverged) throw csfm::NumericError("training diverged; last finite state saved");
    return 0;
  }

  if (*sr) {
    const auto ck = csfm::load_checkpoint(sr_ckpt);
    if (sr_scale != 0 && sr_scale != ck.config.scale)
      throw csfm::ConfigError("checkpoint scale " + std::to_string(ck.config.scale) + " does not match --scale " +
                              std::to_string(sr_scale));
    const auto net = csfm::network_from_checkpoint<float>(ck);
    const auto out = csfm::super_resolve(net, csfm::read_png(sr_in), csfm::checkpoint_mean(ck));
    csfm::write_png(sr_out, out);
    return 0;
  }

  if (*eval) {
    if (ev_ckpt.empty() && !ev_bicubic) throw csfm::ConfigError("eval needs --checkpoint or --bicubic");
    const auto images = csfm::load_png_dir(ev_dir);
    csfm::EvalReport report;
    if (ev_bicubic) {
      if (ev_scale < 1) throw csfm::ConfigError("--bicubic needs --scale");
      report = csfm::evaluate_bicubic(images, ev_scale, ev_crop.value_or(ev_scale));
    } else {
      const auto ck = csfm::load_checkpoint(ev_ckpt);
      if (ev_scale != 0 && ev_scale != ck.config.scale)
        throw csfm::ConfigError("checkpoint scale " + std::to_string(ck.config.scale) + " does not match --scale");
      report = csfm::evaluate_checkpoint(ck, images, ev_crop.value_or(ck.config.scale));
    }
    std::cout << report.to_table();
    return 0;
  }

  if (*sweep) {
    const auto base = load_train_config(sw_args);
    const fs::path root = sw_args.output.empty() ? fs::path(base.output_dir) : fs::path(sw_args.output);
    const auto images = eval_images(base);
    std::vector<csfm::SweepPoint> points;
    for (int m : sw_modules)
      for (int b : sw_blocks) {
        auto cfg = base;
        cfg.model.modules = m;
        cfg.model.blocks = b;
        cfg.output_dir = (root / ("M" + std::to_string(m) + "B" + std::to_string(b))).string();
        cfg.validate();
        const auto result = run_training(cfg, std::nullopt);
        if (result.diverged) throw csfm::NumericError("sweep cell M" + std::to_string(m) + "B" + std::to_string(b) + " diverged");
        const auto report = csfm::evaluate_checkpoint(result.checkpoint, images, cfg.model.scale);
        points.push_back({m, b, report.mean_psnr});
      }
    std::cout << csfm::format_sweep(points);
    return 0;
  }

  if (*gf) {
    std::cout << csfm::gf_weight_norms(csfm::load_checkpoint(gf_ckpt)).to_table();
    return 0;
  }

  if (*mean) {
    const auto m = csfm::dataset_mean(csfm::load_png_dir(mean_dir));
    std::cout << "mean_r = " << m[0] << "\nmean_g = " << m[1] << "\nmean_b = " << m[2] << '\n';
    return 0;
  }

  if (*synth) {
    fs::create_directories(syn_out);
    for (const auto& img : csfm::synthetic_set(syn_count, syn_w, syn_h, syn_seed))
      csfm::write_png(fs::path(syn_out) / (img.name + ".png"), img.image);
    return 0;
  }

  if (*params) {
    std::cout << csfm::count_params(csfm::load_config(pc_config).model) << '\n';
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const csfm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const csfm::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const csfm::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
