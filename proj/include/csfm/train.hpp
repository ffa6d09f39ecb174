// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "csfm/checkpoint.hpp"
#include "csfm/data.hpp"
#include "csfm/loss.hpp"
#include "csfm/model.hpp"
#include "csfm/optim.hpp"

namespace csfm {

/// Everything a training run needs. Defaults follow the published setup;
/// desk-scale runs shrink patch, batch and iterations and set desk_mode so
/// the learning-rate milestones shrink with them.
struct TrainConfig {
  CsfmConfig model;
  int patch_size = 48;
  int batch_size = 16;
  std::int64_t iterations = LrSchedule::kReferenceIterations;
  double learning_rate = 1e-4;
  std::int64_t lr_first_milestone = 300000;
  std::int64_t lr_period = 200000;
  bool desk_mode = false;
  AdamSettings adam;
  bool augment_flip = true;
  bool augment_rotate = true;
  std::uint64_t seed = 1;
  std::string train_dir;
  std::string eval_dir;
  std::string output_dir = "runs/default";
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::array<double, 3> mean_rgb = kDiv2kMeanRgb;

  LrSchedule schedule() const {
    LrSchedule s{learning_rate, lr_first_milestone, lr_period};
    return desk_mode ? s.scaled_to(iterations) : s;
  }

  void validate() const {
    model.validate();
    if (patch_size < 1) throw ConfigError("patch_size must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (iterations < 0) throw ConfigError("iterations must be non-negative");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (lr_first_milestone < 1 || lr_period < 1) throw ConfigError("learning-rate milestones must be positive");
    if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.epsilon > 0))
      throw ConfigError("invalid Adam settings");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LogEntry {
  std::int64_t iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;  // final state, or the last finite state on divergence
  std::vector<LogEntry> log;
  bool diverged = false;
};

struct TrainHooks {
  std::ostream* log = nullptr;  // receives "iter\tlr\tloss" lines
  std::function<void(const Checkpoint&)> on_checkpoint;
};

inline std::array<float, 3> to_float_mean(const std::array<double, 3>& m) {
  return {static_cast<float>(m[0]), static_cast<float>(m[1]), static_cast<float>(m[2])};
}

/// Seed for weight initialisation, separate from the per-iteration streams.
inline std::uint64_t init_seed(std::uint64_t seed) { return Rng(seed).split(0).next_u64(); }

/// Training with the L1 objective and Adam. Iteration t draws its batch from
/// Rng(seed).split(t), so a run resumed from a checkpoint at step k replays
/// exactly what an uninterrupted run would do from k + 1 on.
inline TrainResult train(const TrainConfig& cfg, const Dataset& data, const std::optional<Checkpoint>& resume = {},
                         const TrainHooks& hooks = {}) {
  cfg.validate();
  if (data.scale() != cfg.model.scale)
    throw ConfigError("dataset scale " + std::to_string(data.scale()) + " does not match model scale " +
                      std::to_string(cfg.model.scale));

  CsfmNetwork<float> net;
  OptimState<float> state;
  if (resume) {
    if (!(resume->config == cfg.model)) throw ConfigError("resume checkpoint was trained with a different model");
    net = network_from_checkpoint<float>(*resume);
    state = optim_from_checkpoint<float>(*resume);
    // Hyperparameters follow the current config so a resumed run matches an
    // uninterrupted run with this config.
    state.adam = cfg.adam;
    state.schedule = cfg.schedule();
  } else {
    net = make_network<float>(cfg.model, Init::kHeNormal, init_seed(cfg.seed));
    auto params = net.parameters();
    state = OptimState<float>::fresh(params, cfg.adam, cfg.schedule());
  }
  net.set_requires_grad(true);
  const auto mean = to_float_mean(cfg.mean_rgb);

  SamplingOptions sampling;
  sampling.batch = cfg.batch_size;
  sampling.patch = cfg.patch_size;
  sampling.flip = cfg.augment_flip;
  sampling.rotate = cfg.augment_rotate;
  sampling.mean = cfg.mean_rgb;

  TrainResult result;
  const Rng root(cfg.seed);
  while (state.step < cfg.iterations) {
    const std::int64_t t = state.step + 1;
    Rng rng = root.split(static_cast<std::uint64_t>(t));
    const Batch<float> batch = sample_batch<float>(data, sampling, rng);

    net.zero_grad();
    Tape<float> tape;
    double value = 0.0;
    try {
      Tape<float>::Scope scope(tape);
      Tensor<float> loss = l1_loss(csfm_forward(batch.lr, net), batch.hr);
      tape.backward(loss);
      value = loss.item();
    } catch (const NumericError&) {
      // Debug builds check every op; treat that like a non-finite loss.
      value = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(value)) {
      warn("non-finite loss at iteration " + std::to_string(t) + "; stopping");
      result.diverged = true;
      break;
    }
    auto params = net.parameters();
    adam_step<float>(params, state);
    tape.clear();

    const LogEntry entry{t, state.schedule.at(t), value};
    result.log.push_back(entry);
    if (hooks.log != nullptr) *hooks.log << entry.iteration << '\t' << entry.lr << '\t' << entry.loss << '\n';
    if (cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0 && hooks.on_checkpoint)
      hooks.on_checkpoint(make_checkpoint(net, mean, &state));
  }
  net.zero_grad();
  result.checkpoint = make_checkpoint(net, mean, &state);
  return result;
}

/// Moving average of the logged losses over a trailing window.
inline std::vector<double> smoothed_losses(const std::vector<LogEntry>& log, std::size_t window) {
  std::vector<double> out;
  double acc = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    acc += log[i].loss;
    if (i >= window) acc -= log[i - window].loss;
    out.push_back(acc / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

}  // namespace csfm
