// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "csfm/tensor.hpp"

namespace csfm {

/// Mean absolute error over every element of the batch. The backward pass
/// uses sign(pred - target) / N with subgradient 0 where they are equal.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape())
    throw ShapeError("l1_loss: shape mismatch " + pred.shape().str() + " vs " + target.shape().str());
  auto p = pred.data();
  auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
  const double count = static_cast<double>(p.size());
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / count));
  if (detail::any_requires_grad<T>({&pred, &target})) {
    detail::record(out, [pred, target, out, count]() mutable {
      const T g = static_cast<T>(static_cast<double>(out.grad()[0]) / count);
      auto p = pred.data();
      auto t = target.data();
      auto sign = [](T d) { return d > T{0} ? T{1} : (d < T{0} ? T{-1} : T{0}); };
      if (pred.requires_grad()) {
        auto gp = pred.mutable_grad();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * sign(p[i] - t[i]);
      }
      if (target.requires_grad()) {
        auto gt = target.mutable_grad();
        for (std::size_t i = 0; i < gt.size(); ++i) gt[i] -= g * sign(p[i] - t[i]);
      }
    });
  }
  return out;
}

}  // namespace csfm
