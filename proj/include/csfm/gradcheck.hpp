// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "csfm/tensor.hpp"

namespace csfm {

/// Central-difference gradient of a scalar function with respect to `x`.
///
/// `f` is evaluated with no tape active. Each element of `x` is perturbed in
/// place and restored bitwise before the next one.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f, Tensor<T> x, T step) {
  if (!(step > T{0})) throw std::invalid_argument("finite_diff_grad: step must be positive");
  Tensor<T> grad(x.shape());
  auto values = x.mutable_data();
  auto g = grad.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    values[i] = saved + step;
    const T up = f(x);
    values[i] = saved - step;
    const T down = f(x);
    values[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite_diff_grad: non-finite function value when perturbing index " +
                         std::to_string(i));
    g[i] = (up - down) / (T{2} * step);
  }
  return grad;
}

/// Central differences at selected flat indices of `x` only.
template <typename T>
std::vector<T> finite_diff_at(const std::function<T()>& f, Tensor<T> x, std::span<const std::int64_t> indices,
                              T step) {
  std::vector<T> out;
  out.reserve(indices.size());
  auto values = x.mutable_data();
  for (std::int64_t i : indices) {
    const T saved = values[i];
    values[i] = saved + step;
    const T up = f();
    values[i] = saved - step;
    const T down = f();
    values[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite_diff_at: non-finite function value when perturbing index " + std::to_string(i));
    out.push_back((up - down) / (T{2} * step));
  }
  return out;
}

/// Largest elementwise disagreement between an analytic and a numeric
/// gradient, relative to the numeric gradient's largest magnitude.
template <typename T>
double max_relative_error(std::span<const T> analytic, std::span<const T> numeric) {
  double scale = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    scale = std::max(scale, std::abs(static_cast<double>(numeric[i])));
    worst = std::max(worst, std::abs(static_cast<double>(analytic[i]) - static_cast<double>(numeric[i])));
  }
  if (scale == 0.0) return worst;
  return worst / scale;
}

}  // namespace csfm
