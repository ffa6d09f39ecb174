// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers and reference implementations for the test programs.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <vector>

#include "csfm/csfm.hpp"

namespace csfm::testing {

template <typename T>
Tensor<T> random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensor<T> t(s);
  for (auto& v : t.mutable_data()) v = static_cast<T>(scale * rng.normal());
  return t;
}

template <typename T>
ConvParams<T> random_conv(std::int64_t in, std::int64_t out, std::int64_t k, Rng& rng, double scale = 0.3) {
  return {random_tensor<T>(Shape{out, in, k, k}, rng, scale), random_tensor<T>(Shape{1, out, 1, 1}, rng, scale)};
}

/// Six nested loops, zero padding by bounds check.
template <typename T>
Tensor<T> naive_conv(const Tensor<T>& x, const ConvParams<T>& p, std::int64_t pad) {
  const Shape xs = x.shape(), ws = p.weight.shape();
  const std::int64_t oh = xs.h + 2 * pad - ws.h + 1, ow = xs.w + 2 * pad - ws.w + 1;
  Tensor<T> out(Shape{xs.n, ws.n, oh, ow});
  auto o = out.mutable_data();
  for (std::int64_t n = 0; n < xs.n; ++n)
    for (std::int64_t oc = 0; oc < ws.n; ++oc)
      for (std::int64_t y = 0; y < oh; ++y)
        for (std::int64_t xx = 0; xx < ow; ++xx) {
          double acc = p.bias.data()[oc];
          for (std::int64_t ic = 0; ic < xs.c; ++ic)
            for (std::int64_t ky = 0; ky < ws.h; ++ky)
              for (std::int64_t kx = 0; kx < ws.w; ++kx) {
                const std::int64_t iy = y + ky - pad, ix = xx + kx - pad;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += static_cast<double>(p.weight.at(oc, ic, ky, kx)) * x.at(n, ic, iy, ix);
              }
          o[out.index(n, oc, y, xx)] = static_cast<T>(acc);
        }
  return out;
}

/// Dense-layer view of a 1x1 conv applied to one C-vector.
inline std::vector<double> dense(const ConvParams<double>& p, const std::vector<double>& in) {
  const auto out_c = p.out_channels(), in_c = p.in_channels();
  std::vector<double> out(static_cast<std::size_t>(out_c));
  for (std::int64_t o = 0; o < out_c; ++o) {
    double acc = p.bias.data()[o];
    for (std::int64_t i = 0; i < in_c; ++i) acc += p.weight.at(o, i, 0, 0) * in[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = acc;
  }
  return out;
}

inline double sigmoid_ref(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline bool bitwise_equal(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

template <typename T>
bool exactly_equal(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape())) return false;
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i)
    if (da[i] != db[i]) return false;
  return true;
}

/// Analytic gradient of `loss_fn` with respect to every listed tensor.
template <typename T>
std::vector<std::vector<T>> analytic_grads(const std::function<Tensor<T>()>& loss_fn, std::vector<Tensor<T>> wrt) {
  for (auto& t : wrt) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tape<T> tape;
  {
    typename Tape<T>::Scope scope(tape);
    auto loss = loss_fn();
    tape.backward(loss);
  }
  std::vector<std::vector<T>> out;
  for (auto& t : wrt) {
    if (t.has_grad()) out.emplace_back(t.grad().begin(), t.grad().end());
    else out.emplace_back(static_cast<std::size_t>(t.numel()), T{0});
  }
  return out;
}

/// Max relative error of backward against central differences over all
/// elements of every listed tensor.
template <typename T>
double gradcheck(const std::function<Tensor<T>()>& loss_fn, const std::vector<Tensor<T>>& wrt, T step) {
  const auto analytic = analytic_grads<T>(loss_fn, wrt);
  std::vector<T> a_all, n_all;
  const std::function<T()> value = [&] { return loss_fn().item(); };
  for (std::size_t k = 0; k < wrt.size(); ++k) {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(wrt[k].numel()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int64_t>(i);
    const auto numeric = finite_diff_at<T>(value, wrt[k], idx, step);
    a_all.insert(a_all.end(), analytic[k].begin(), analytic[k].end());
    n_all.insert(n_all.end(), numeric.begin(), numeric.end());
  }
  return max_relative_error<T>(a_all, n_all);
}

/// Fixed random projection so that gradients of non-scalar ops are tested
/// against a generic linear functional rather than a plain sum.
template <typename T>
Tensor<T> project(const Tensor<T>& y, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(y, random_tensor<T>(y.shape(), rng)));
}

inline CsfmConfig tiny_config(BlockVariant v = BlockVariant::kCSAR) {
  CsfmConfig c;
  c.scale = 2;
  c.channels = 16;
  c.modules = 2;
  c.blocks = 2;
  c.reduction = 4;
  c.expansion = 2;
  c.variant = v;
  return c;
}

}  // namespace csfm::testing
