// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csfm/model.hpp"

namespace csfm {

/// Step learning rate: `base` up to `first_milestone`, then halved once, and
/// halved again every `period` iterations after that.
struct LrSchedule {
  double base = 1e-4;
  std::int64_t first_milestone = 300000;
  std::int64_t period = 200000;

  /// Iteration budget the default milestones were laid out for.
  static constexpr std::int64_t kReferenceIterations = 900000;

  double at(std::int64_t t) const {
    if (t <= first_milestone) return base;
    const std::int64_t halvings = 1 + (t - first_milestone - 1) / period;
    return base * std::ldexp(1.0, -static_cast<int>(std::min<std::int64_t>(halvings, 1000)));
  }

  /// Milestones shrunk by total / kReferenceIterations for short runs.
  LrSchedule scaled_to(std::int64_t total_iterations) const {
    const double f = static_cast<double>(total_iterations) / static_cast<double>(kReferenceIterations);
    LrSchedule s = *this;
    s.first_milestone = std::max<std::int64_t>(1, std::llround(static_cast<double>(first_milestone) * f));
    s.period = std::max<std::int64_t>(1, std::llround(static_cast<double>(period) * f));
    return s;
  }

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

/// First/second moments per parameter (same order as the network's
/// parameter list) and the number of completed updates.
template <typename T>
struct OptimState {
  AdamSettings adam;
  LrSchedule schedule;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static OptimState fresh(std::span<const NamedParam<T>> params, AdamSettings adam, LrSchedule schedule) {
    OptimState s;
    s.adam = adam;
    s.schedule = schedule;
    for (const auto& p : params) {
      s.m.emplace_back(static_cast<std::size_t>(p.tensor.numel()), T{0});
      s.v.emplace_back(static_cast<std::size_t>(p.tensor.numel()), T{0});
    }
    return s;
  }
};

/// One bias-corrected Adam update using lr = schedule.at(step + 1).
template <typename T>
void adam_step(std::span<NamedParam<T>> params, OptimState<T>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_step: optimizer state has " + std::to_string(state.m.size()) + " entries for " +
                     std::to_string(params.size()) + " parameters");
  for (const auto& p : params)
    if (!p.tensor.has_grad()) throw NumericError("adam_step: missing gradient for parameter " + p.name);

  const std::int64_t t = state.step + 1;
  const double lr = state.schedule.at(t);
  const double b1 = state.adam.beta1, b2 = state.adam.beta2;
  const T correction1 = static_cast<T>(1.0 - std::pow(b1, static_cast<double>(t)));
  const T correction2 = static_cast<T>(1.0 - std::pow(b2, static_cast<double>(t)));
  const T beta1 = static_cast<T>(b1), beta2 = static_cast<T>(b2);
  const T eps = static_cast<T>(state.adam.epsilon);
  const T rate = static_cast<T>(lr);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k].tensor.mutable_data();
    auto g = params[k].tensor.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != theta.size() || v.size() != theta.size())
      throw ShapeError("adam_step: moment size mismatch for parameter " + params[k].name);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (T{1} - beta1) * g[i];
      v[i] = beta2 * v[i] + (T{1} - beta2) * g[i] * g[i];
      const T m_hat = m[i] / correction1;
      const T v_hat = v[i] / correction2;
      theta[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  state.step = t;
}

}  // namespace csfm
