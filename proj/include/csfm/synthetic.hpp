// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "csfm/data.hpp"
#include "csfm/image.hpp"
#include "csfm/rng.hpp"

namespace csfm {

/// Procedural 8-bit RGB test scene: a smooth colour gradient overlaid with
/// soft-edged discs, rectangles and sinusoidal gratings. Edges are
/// antialiased over about one pixel, so the content is sharp but not aliased.
inline ImagePlane synthetic_image(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) throw DataError("synthetic_image: size must be positive");
  Rng rng(seed);
  std::vector<double> rgb(static_cast<std::size_t>(width) * height * 3);

  double base[3], dx[3], dy[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.2, 0.8);
    dx[c] = rng.uniform(-0.3, 0.3);
    dy[c] = rng.uniform(-0.3, 0.3);
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
            base[c] + dx[c] * (static_cast<double>(x) / width - 0.5) + dy[c] * (static_cast<double>(y) / height - 0.5);

  // Coverage of a signed distance d (negative inside) with a one-pixel ramp.
  auto coverage = [](double d) { return std::clamp(0.5 - d, 0.0, 1.0); };
  auto blend = [&](int x, int y, const double* colour, double alpha) {
    if (alpha <= 0.0) return;
    for (int c = 0; c < 3; ++c) {
      double& v = rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
      v = (1.0 - alpha) * v + alpha * colour[c];
    }
  };

  const int shapes = 6 + static_cast<int>(rng.below(6));
  const double extent = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    double colour[3];
    for (double& c : colour) c = rng.uniform(0.0, 1.0);
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    switch (rng.below(3)) {
      case 0: {
        const double r = rng.uniform(0.05, 0.25) * extent;
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) blend(x, y, colour, coverage(std::hypot(x + 0.5 - cx, y + 0.5 - cy) - r));
        break;
      }
      case 1: {
        const double hw = rng.uniform(0.05, 0.3) * extent;
        const double hh = rng.uniform(0.05, 0.3) * extent;
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) {
            const double d = std::max(std::abs(x + 0.5 - cx) - hw, std::abs(y + 0.5 - cy) - hh);
            blend(x, y, colour, coverage(d));
          }
        break;
      }
      default: {
        const double r = rng.uniform(0.1, 0.3) * extent;
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double period = rng.uniform(4.0, 12.0);
        const double ca = std::cos(angle), sa = std::sin(angle);
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) {
            const double px = x + 0.5 - cx, py = y + 0.5 - cy;
            const double inside = coverage(std::hypot(px, py) - r);
            const double wave = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (ca * px + sa * py) / period);
            blend(x, y, colour, inside * wave);
          }
        break;
      }
    }
  }

  ImagePlane img(width, height, ValueDomain::kU8, ColorSpace::kRGB);
  for (std::size_t i = 0; i < rgb.size(); ++i) img.data[i] = std::round(std::clamp(rgb[i], 0.0, 1.0) * 255.0);
  return img;
}

/// `count` synthetic images named synth_00, synth_01, ...
inline std::vector<NamedImage> synthetic_set(int count, int width, int height, std::uint64_t seed) {
  std::vector<NamedImage> out;
  const Rng root(seed);
  for (int i = 0; i < count; ++i) {
    std::string name = std::to_string(i);
    if (name.size() < 2) name.insert(0, 2 - name.size(), '0');
    out.push_back({"synth_" + name, synthetic_image(width, height, root.split(static_cast<std::uint64_t>(i)).next_u64())});
  }
  return out;
}

}  // namespace csfm
