// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "csfm/tensor.hpp"

namespace csfm {

namespace detail {

enum class Broadcast { kNone, kChannel, kSpatial };

// b may equal a's shape, be n x c x 1 x 1 (per-channel value), or
// n x 1 x h x w (per-position value).
inline Broadcast broadcast_kind(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Broadcast::kNone;
  if (b.n == a.n && b.c == a.c && b.h == 1 && b.w == 1) return Broadcast::kChannel;
  if (b.n == a.n && b.c == 1 && b.h == a.h && b.w == a.w) return Broadcast::kSpatial;
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

// Calls fn(i, j) for every element i of `a` with j the matching element of `b`.
template <typename Fn>
void for_each_broadcast(const Shape& a, Broadcast kind, Fn&& fn) {
  const std::int64_t plane = a.plane();
  std::int64_t i = 0;
  for (std::int64_t n = 0; n < a.n; ++n) {
    for (std::int64_t c = 0; c < a.c; ++c) {
      for (std::int64_t p = 0; p < plane; ++p, ++i) {
        std::int64_t j = i;
        if (kind == Broadcast::kChannel) j = n * a.c + c;
        if (kind == Broadcast::kSpatial) j = n * plane + p;
        fn(i, j);
      }
    }
  }
}

}  // namespace detail

/// a + b, with b optionally broadcast per channel or per position.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto kind = detail::broadcast_kind(a.shape(), b.shape(), "add");
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  detail::for_each_broadcast(a.shape(), kind, [&](std::int64_t i, std::int64_t j) { o[i] = x[i] + y[j]; });
  detail::check_finite(out, "add");
  if (detail::any_requires_grad<T>({&a, &b})) {
    detail::record(out, [a, b, out, kind]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        detail::for_each_broadcast(a.shape(), kind, [&](std::int64_t i, std::int64_t j) { gb[j] += g[i]; });
      }
    });
  }
  return out;
}

/// a * b elementwise, with b optionally broadcast per channel or per position.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto kind = detail::broadcast_kind(a.shape(), b.shape(), "mul");
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  detail::for_each_broadcast(a.shape(), kind, [&](std::int64_t i, std::int64_t j) { o[i] = x[i] * y[j]; });
  detail::check_finite(out, "mul");
  if (detail::any_requires_grad<T>({&a, &b})) {
    detail::record(out, [a, b, out, kind]() mutable {
      auto g = out.grad();
      auto x = a.data();
      auto y = b.data();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        detail::for_each_broadcast(a.shape(), kind, [&](std::int64_t i, std::int64_t j) { ga[i] += g[i] * y[j]; });
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        detail::for_each_broadcast(a.shape(), kind, [&](std::int64_t i, std::int64_t j) { gb[j] += g[i] * x[i]; });
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scalar_mul(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  auto o = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * s;
  detail::check_finite(out, "scalar_mul");
  if (detail::any_requires_grad<T>({&a})) {
    detail::record(out, [a, out, s]() mutable {
      auto g = out.grad();
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
    });
  }
  return out;
}

/// Concatenates along channels in argument order. Requires equal n, h, w.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape s = parts[0].shape();
  s.c = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w)
      throw ShapeError("concat_channels: incompatible shapes " + parts[0].shape().str() + " and " + ps.str());
    s.c += ps.c;
  }
  Tensor<T> out(s);
  auto o = out.mutable_data();
  const std::int64_t plane = s.plane();
  std::int64_t offset = 0;
  for (const auto& p : parts) {
    auto x = p.data();
    const std::int64_t block = p.shape().c * plane;
    for (std::int64_t n = 0; n < s.n; ++n)
      std::copy_n(x.begin() + n * block, block, o.begin() + n * s.c * plane + offset);
    offset += block;
  }
  bool track = Tape<T>::active() != nullptr;
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  if (track && any) {
    std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
    detail::record(out, [inputs, out, s, plane]() mutable {
      auto g = out.grad();
      std::int64_t offset = 0;
      for (auto& p : inputs) {
        const std::int64_t block = p.shape().c * plane;
        if (p.requires_grad()) {
          auto gp = p.mutable_grad();
          for (std::int64_t n = 0; n < s.n; ++n)
            for (std::int64_t k = 0; k < block; ++k) gp[n * block + k] += g[n * s.c * plane + offset + k];
        }
        offset += block;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Tensor<T> parts[] = {a, b};
  return concat_channels<T>(std::span<const Tensor<T>>(parts));
}

/// Inverse of concat_channels at a single boundary: channels [0, at) and [at, c).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& x, std::int64_t at) {
  const Shape s = x.shape();
  if (at < 0 || at > s.c) throw ShapeError("split_channels: boundary outside " + s.str());
  const std::int64_t plane = s.plane();
  Shape sa = s;
  sa.c = at;
  Shape sb = s;
  sb.c = s.c - at;
  Tensor<T> a(sa);
  Tensor<T> b(sb);
  auto xd = x.data();
  auto ad = a.mutable_data();
  auto bd = b.mutable_data();
  for (std::int64_t n = 0; n < s.n; ++n) {
    std::copy_n(xd.begin() + n * s.c * plane, sa.c * plane, ad.begin() + n * sa.c * plane);
    std::copy_n(xd.begin() + (n * s.c + at) * plane, sb.c * plane, bd.begin() + n * sb.c * plane);
  }
  if (detail::any_requires_grad<T>({&x})) {
    auto rule = [x, plane, s](Tensor<T> part, std::int64_t first) mutable {
      if (!part.has_grad()) return;
      auto g = part.grad();
      auto gx = x.mutable_grad();
      const std::int64_t block = part.shape().c * plane;
      for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t k = 0; k < block; ++k) gx[(n * s.c + first) * plane + k] += g[n * block + k];
    };
    detail::record(a, [rule, a]() mutable { rule(a, 0); });
    detail::record(b, [rule, b, at]() mutable { rule(b, at); });
  }
  return {a, b};
}

/// Sum of all elements as a 1x1x1x1 tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0.0;
  for (T v : x.data()) acc += static_cast<double>(v);
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc));
  if (detail::any_requires_grad<T>({&x})) {
    detail::record(out, [x, out]() mutable {
      const T g = out.grad()[0];
      for (auto& v : x.mutable_grad()) v += g;
    });
  }
  return out;
}

}  // namespace csfm
