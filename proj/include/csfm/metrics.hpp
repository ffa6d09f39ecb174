// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "csfm/image.hpp"

namespace csfm {

namespace detail {

inline void check_same_dims(const LumaPlane& a, const LumaPlane& b, int crop, const char* what) {
  if (a.width != b.width || a.height != b.height)
    throw DataError(std::string(what) + ": dimension mismatch " + std::to_string(a.width) + "x" +
                    std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  if (crop < 0 || 2 * crop >= a.width || 2 * crop >= a.height)
    throw DataError(std::string(what) + ": crop " + std::to_string(crop) + " leaves no pixels");
}

}  // namespace detail

/// PSNR in dB over the plane with `crop` pixels removed from every side,
/// peak 255. Identical planes give +infinity.
inline double psnr(const LumaPlane& a, const LumaPlane& b, int crop) {
  detail::check_same_dims(a, b, crop, "psnr");
  double sse = 0.0;
  std::int64_t count = 0;
  for (int y = crop; y < a.height - crop; ++y)
    for (int x = crop; x < a.width - crop; ++x) {
      const double d = a.at(x, y) - b.at(x, y);
      sse += d * d;
      ++count;
    }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / (sse / static_cast<double>(count)));
}

/// Normalised 11x11 Gaussian window with sigma 1.5.
inline std::array<double, 121> ssim_window() {
  std::array<double, 121> w{};
  double total = 0.0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      const double dx = x - 5, dy = y - 5;
      w[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      total += w[y * 11 + x];
    }
  for (double& v : w) v /= total;
  return w;
}

/// Mean structural similarity over every full 11x11 Gaussian window inside
/// the cropped region (K1 = 0.01, K2 = 0.03, dynamic range 255).
inline double ssim(const LumaPlane& a, const LumaPlane& b, int crop) {
  detail::check_same_dims(a, b, crop, "ssim");
  const int w = a.width - 2 * crop, h = a.height - 2 * crop;
  if (w < 11 || h < 11) throw DataError("ssim: cropped region smaller than the 11x11 window");
  const auto win = ssim_window();
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  double total = 0.0;
  std::int64_t count = 0;
  for (int y0 = 0; y0 + 11 <= h; ++y0)
    for (int x0 = 0; x0 + 11 <= w; ++x0) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int ky = 0; ky < 11; ++ky)
        for (int kx = 0; kx < 11; ++kx) {
          const double g = win[ky * 11 + kx];
          const double va = a.at(crop + x0 + kx, crop + y0 + ky);
          const double vb = b.at(crop + x0 + kx, crop + y0 + ky);
          mu_a += g * va;
          mu_b += g * vb;
          aa += g * va * va;
          bb += g * vb * vb;
          ab += g * (va * vb);
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      // Products grouped so swapping a and b gives bitwise the same result.
      const double mu_ab = mu_a * mu_b;
      const double cov = ab - mu_ab;
      total += ((2 * mu_ab + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace csfm
