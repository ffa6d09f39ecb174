// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "csfm/image.hpp"

namespace csfm {

/// Keys cubic convolution kernel with a = -0.5.
inline double cubic_kernel(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

/// Sampling taps for resizing one axis from `in_len` to `out_len` samples.
struct ResampleTaps {
  int taps = 0;
  std::vector<int> index;      // out_len x taps, clamped to [0, in_len)
  std::vector<double> weight;  // out_len x taps, each row sums to 1
};

/// Output sample i (1-based) sits at input coordinate u = i/s + (1 - 1/s)/2.
/// When shrinking (s < 1) the kernel is stretched by 1/s, which low-pass
/// filters the input before decimation.
inline ResampleTaps resample_taps(int in_len, int out_len, bool antialias = true) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const bool stretch = antialias && scale < 1.0;
  const double kernel_width = stretch ? 4.0 / scale : 4.0;
  ResampleTaps t;
  t.taps = static_cast<int>(std::ceil(kernel_width)) + 2;
  t.index.resize(static_cast<std::size_t>(out_len) * t.taps);
  t.weight.resize(static_cast<std::size_t>(out_len) * t.taps);
  for (int i = 0; i < out_len; ++i) {
    const double u = (i + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const double left = std::floor(u - kernel_width / 2.0);
    double total = 0.0;
    for (int k = 0; k < t.taps; ++k) {
      const double j = left + k;
      const double d = u - j;
      const double w = stretch ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
      t.weight[static_cast<std::size_t>(i) * t.taps + k] = w;
      t.index[static_cast<std::size_t>(i) * t.taps + k] =
          std::clamp(static_cast<int>(j) - 1, 0, in_len - 1);
      total += w;
    }
    for (int k = 0; k < t.taps; ++k) t.weight[static_cast<std::size_t>(i) * t.taps + k] /= total;
  }
  return t;
}

namespace detail {

inline ImagePlane resize_rows(const ImagePlane& img, int out_h) {
  const ResampleTaps t = resample_taps(img.height, out_h);
  ImagePlane out(img.width, out_h, img.domain, img.color);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = 0; k < t.taps; ++k) {
          const std::size_t at = static_cast<std::size_t>(y) * t.taps + k;
          acc += t.weight[at] * img.at(x, t.index[at], c);
        }
        out.at(x, y, c) = acc;
      }
  return out;
}

inline ImagePlane resize_cols(const ImagePlane& img, int out_w) {
  const ResampleTaps t = resample_taps(img.width, out_w);
  ImagePlane out(out_w, img.height, img.domain, img.color);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < out_w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = 0; k < t.taps; ++k) {
          const std::size_t at = static_cast<std::size_t>(x) * t.taps + k;
          acc += t.weight[at] * img.at(t.index[at], y, c);
        }
        out.at(x, y, c) = acc;
      }
  return out;
}

}  // namespace detail

/// Separable bicubic resize in the convention of the usual SR benchmark
/// tooling: a = -0.5 kernel, antialiasing on downscale, border samples
/// replicated. The axis with the smaller scale factor is processed first
/// (rows on ties). 8-bit inputs are rounded and saturated after each pass,
/// as the reference tooling does; float inputs are never clipped.
inline ImagePlane bicubic_resize(const ImagePlane& img, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw DataError("bicubic_resize: target size must be positive");
  if (img.width < 1 || img.height < 1) throw DataError("bicubic_resize: empty input");
  const double sy = static_cast<double>(target_h) / img.height;
  const double sx = static_cast<double>(target_w) / img.width;
  const bool u8 = img.domain == ValueDomain::kU8;
  auto settle = [u8](ImagePlane p) { return u8 ? quantize_u8(p) : p; };
  if (sy <= sx) return settle(detail::resize_cols(settle(detail::resize_rows(img, target_h)), target_w));
  return settle(detail::resize_rows(settle(detail::resize_cols(img, target_w)), target_h));
}

}  // namespace csfm
