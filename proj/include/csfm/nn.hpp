// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "csfm/parallel.hpp"
#include "csfm/tensor.hpp"

namespace csfm {

/// Convolution filter bank: weight is out x in x kH x kW, bias is 1 x out x 1 x 1.
template <typename T>
struct ConvParams {
  Tensor<T> weight;
  Tensor<T> bias;

  static ConvParams zeros(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel) {
    ConvParams p;
    p.weight = Tensor<T>(Shape{out_channels, in_channels, kernel, kernel});
    p.bias = Tensor<T>(Shape{1, out_channels, 1, 1});
    return p;
  }

  std::int64_t in_channels() const { return weight.shape().c; }
  std::int64_t out_channels() const { return weight.shape().n; }
  std::int64_t kernel_h() const { return weight.shape().h; }
  std::int64_t kernel_w() const { return weight.shape().w; }
  std::int64_t numel() const { return weight.numel() + bias.numel(); }
};

/// Stride-1 cross-correlation with `pad` zeros on every border.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const ConvParams<T>& p, std::int64_t pad) {
  const Shape xs = x.shape();
  const Shape ws = p.weight.shape();
  if (ws.c != xs.c)
    throw ShapeError("conv2d: input " + xs.str() + " does not match weight " + ws.str());
  if (p.bias.shape() != Shape{1, ws.n, 1, 1})
    throw ShapeError("conv2d: bias " + p.bias.shape().str() + " does not match weight " + ws.str());
  if (pad < 0) throw ShapeError("conv2d: negative padding");
  const std::int64_t kh = ws.h, kw = ws.w;
  const std::int64_t oh = xs.h + 2 * pad - kh + 1;
  const std::int64_t ow = xs.w + 2 * pad - kw + 1;
  if (oh <= 0 || ow <= 0)
    throw ShapeError("conv2d: empty output for input " + xs.str() + " and kernel " + ws.str());
  const std::int64_t in_c = xs.c, out_c = ws.n, ih = xs.h, iw = xs.w;

  Tensor<T> out(Shape{xs.n, out_c, oh, ow});
  {
    const T* in = x.data().data();
    const T* wt = p.weight.data().data();
    const T* bs = p.bias.data().data();
    T* o = out.mutable_data().data();
    parallel_for(xs.n * out_c, [&](std::int64_t idx) {
      const std::int64_t n = idx / out_c, oc = idx % out_c;
      T* op = o + idx * oh * ow;
      std::fill(op, op + oh * ow, bs[oc]);
      for (std::int64_t ic = 0; ic < in_c; ++ic) {
        const T* ip = in + (n * in_c + ic) * ih * iw;
        const T* wk = wt + (oc * in_c + ic) * kh * kw;
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            const T wv = wk[ky * kw + kx];
            const std::int64_t lo = std::max<std::int64_t>(0, pad - kx);
            const std::int64_t hi = std::min<std::int64_t>(ow, iw + pad - kx);
            for (std::int64_t oy = 0; oy < oh; ++oy) {
              const std::int64_t iy = oy + ky - pad;
              if (iy < 0 || iy >= ih) continue;
              T* orow = op + oy * ow;
              const T* irow = ip + iy * iw;
              const std::int64_t shift = kx - pad;
              for (std::int64_t ox = lo; ox < hi; ++ox) orow[ox] += wv * irow[ox + shift];
            }
          }
        }
      }
    });
  }
  detail::check_finite(out, "conv2d");

  if (detail::any_requires_grad<T>({&x, &p.weight, &p.bias})) {
    detail::record(out, [x, w = p.weight, b = p.bias, out, pad, kh, kw, oh, ow, in_c, out_c, ih, iw,
                         batch = xs.n]() mutable {
      const T* g = out.grad().data();
      const T* wt = w.data().data();
      const T* in = x.data().data();
      if (x.requires_grad()) {
        T* gx = x.mutable_grad().data();
        parallel_for(batch * in_c, [&](std::int64_t idx) {
          const std::int64_t n = idx / in_c, ic = idx % in_c;
          T* gi = gx + idx * ih * iw;
          for (std::int64_t oc = 0; oc < out_c; ++oc) {
            const T* go = g + (n * out_c + oc) * oh * ow;
            const T* wk = wt + (oc * in_c + ic) * kh * kw;
            for (std::int64_t ky = 0; ky < kh; ++ky) {
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const T wv = wk[ky * kw + kx];
                const std::int64_t lo = std::max<std::int64_t>(0, pad - kx);
                const std::int64_t hi = std::min<std::int64_t>(ow, iw + pad - kx);
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                  const std::int64_t iy = oy + ky - pad;
                  if (iy < 0 || iy >= ih) continue;
                  T* grow = gi + iy * iw;
                  const T* orow = go + oy * ow;
                  const std::int64_t shift = kx - pad;
                  for (std::int64_t ox = lo; ox < hi; ++ox) grow[ox + shift] += wv * orow[ox];
                }
              }
            }
          }
        });
      }
      if (w.requires_grad()) {
        T* gw = w.mutable_grad().data();
        parallel_for(out_c, [&](std::int64_t oc) {
          for (std::int64_t ic = 0; ic < in_c; ++ic) {
            for (std::int64_t ky = 0; ky < kh; ++ky) {
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const std::int64_t lo = std::max<std::int64_t>(0, pad - kx);
                const std::int64_t hi = std::min<std::int64_t>(ow, iw + pad - kx);
                T acc = 0;
                for (std::int64_t n = 0; n < batch; ++n) {
                  const T* go = g + (n * out_c + oc) * oh * ow;
                  const T* ip = in + (n * in_c + ic) * ih * iw;
                  for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy + ky - pad;
                    if (iy < 0 || iy >= ih) continue;
                    const T* orow = go + oy * ow;
                    const T* irow = ip + iy * iw;
                    const std::int64_t shift = kx - pad;
                    for (std::int64_t ox = lo; ox < hi; ++ox) acc += orow[ox] * irow[ox + shift];
                  }
                }
                gw[((oc * in_c + ic) * kh + ky) * kw + kx] += acc;
              }
            }
          }
        });
      }
      if (b.requires_grad()) {
        T* gb = b.mutable_grad().data();
        for (std::int64_t oc = 0; oc < out_c; ++oc) {
          T acc = 0;
          for (std::int64_t n = 0; n < batch; ++n) {
            const T* go = g + (n * out_c + oc) * oh * ow;
            for (std::int64_t k = 0; k < oh * ow; ++k) acc += go[k];
          }
          gb[oc] += acc;
        }
      }
    });
  }
  return out;
}

/// max(0, x); the backward pass uses subgradient 0 at x = 0.
template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > T{0} ? in[i] : T{0};
  if (detail::any_requires_grad<T>({&x})) {
    detail::record(out, [x, out]() mutable {
      auto g = out.grad();
      auto in = x.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (in[i] > T{0}) gx[i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = T{1} / (T{1} + std::exp(-in[i]));
  detail::check_finite(out, "sigmoid");
  if (detail::any_requires_grad<T>({&x})) {
    detail::record(out, [x, out]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T{1} - y[i]);
    });
  }
  return out;
}

/// Per-channel spatial mean, n x c x 1 x 1.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  const Shape s = x.shape();
  if (s.h < 1 || s.w < 1) throw ShapeError("global_avg_pool: empty spatial extent " + s.str());
  const std::int64_t plane = s.plane();
  Tensor<T> out(Shape{s.n, s.c, 1, 1});
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::int64_t k = 0; k < s.n * s.c; ++k) {
    T acc = 0;
    for (std::int64_t p = 0; p < plane; ++p) acc += in[k * plane + p];
    o[k] = acc / static_cast<T>(plane);
  }
  if (detail::any_requires_grad<T>({&x})) {
    detail::record(out, [x, out, plane]() mutable {
      auto g = out.grad();
      auto gx = x.mutable_grad();
      for (std::size_t k = 0; k < g.size(); ++k) {
        const T v = g[k] / static_cast<T>(plane);
        for (std::int64_t p = 0; p < plane; ++p) gx[k * plane + p] += v;
      }
    });
  }
  return out;
}

namespace detail {

// Input-channel index feeding output position (c, y, x) of a shuffle by s.
inline std::int64_t shuffle_source(std::int64_t c, std::int64_t y, std::int64_t x, std::int64_t s,
                                   std::int64_t in_c, std::int64_t in_h, std::int64_t in_w,
                                   std::int64_t n) {
  const std::int64_t ic = c * s * s + (y % s) * s + (x % s);
  return ((n * in_c + ic) * in_h + y / s) * in_w + x / s;
}

}  // namespace detail

/// Rearranges n x (c*s*s) x h x w into n x c x (h*s) x (w*s):
/// out(n, c, y*s + dy, x*s + dx) = in(n, c*s*s + dy*s + dx, y, x).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::int64_t s) {
  const Shape in = x.shape();
  if (s < 1 || in.c % (s * s) != 0)
    throw ShapeError("pixel_shuffle: channels of " + in.str() + " not divisible by " + std::to_string(s * s));
  const Shape os{in.n, in.c / (s * s), in.h * s, in.w * s};
  Tensor<T> out(os);
  auto o = out.mutable_data();
  auto src = x.data();
  std::int64_t i = 0;
  for (std::int64_t n = 0; n < os.n; ++n)
    for (std::int64_t c = 0; c < os.c; ++c)
      for (std::int64_t y = 0; y < os.h; ++y)
        for (std::int64_t xx = 0; xx < os.w; ++xx, ++i)
          o[i] = src[detail::shuffle_source(c, y, xx, s, in.c, in.h, in.w, n)];
  if (detail::any_requires_grad<T>({&x})) {
    detail::record(out, [x, out, s, in, os]() mutable {
      auto g = out.grad();
      auto gx = x.mutable_grad();
      std::int64_t i = 0;
      for (std::int64_t n = 0; n < os.n; ++n)
        for (std::int64_t c = 0; c < os.c; ++c)
          for (std::int64_t y = 0; y < os.h; ++y)
            for (std::int64_t xx = 0; xx < os.w; ++xx, ++i)
              gx[detail::shuffle_source(c, y, xx, s, in.c, in.h, in.w, n)] += g[i];
    });
  }
  return out;
}

/// Inverse of pixel_shuffle: n x c x (h*s) x (w*s) -> n x (c*s*s) x h x w.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::int64_t s) {
  const Shape os = x.shape();
  if (s < 1 || os.h % s != 0 || os.w % s != 0)
    throw ShapeError("pixel_unshuffle: spatial extent of " + os.str() + " not divisible by " + std::to_string(s));
  const Shape in{os.n, os.c * s * s, os.h / s, os.w / s};
  Tensor<T> out(in);
  auto o = out.mutable_data();
  auto src = x.data();
  std::int64_t i = 0;
  for (std::int64_t n = 0; n < os.n; ++n)
    for (std::int64_t c = 0; c < os.c; ++c)
      for (std::int64_t y = 0; y < os.h; ++y)
        for (std::int64_t xx = 0; xx < os.w; ++xx, ++i)
          o[detail::shuffle_source(c, y, xx, s, in.c, in.h, in.w, n)] = src[i];
  if (detail::any_requires_grad<T>({&x})) {
    detail::record(out, [x, out, s, in, os]() mutable {
      auto g = out.grad();
      auto gx = x.mutable_grad();
      std::int64_t i = 0;
      for (std::int64_t n = 0; n < os.n; ++n)
        for (std::int64_t c = 0; c < os.c; ++c)
          for (std::int64_t y = 0; y < os.h; ++y)
            for (std::int64_t xx = 0; xx < os.w; ++xx, ++i)
              gx[i] += g[detail::shuffle_source(c, y, xx, s, in.c, in.h, in.w, n)];
    });
  }
  return out;
}

}  // namespace csfm
