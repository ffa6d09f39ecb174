// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "csfm/errors.hpp"
#include "csfm/tensor.hpp"

namespace csfm {

/// Value range an image's samples live in.
enum class ValueDomain {
  kU8,              // integers 0..255
  kUnit,            // [0, 1]
  kMeanSubtracted,  // [0, 1] minus a per-channel mean
};

enum class ColorSpace { kRGB, kYCbCr };

/// Interleaved 3-channel image of doubles with range and colour metadata.
struct ImagePlane {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // (y * width + x) * 3 + channel
  ValueDomain domain = ValueDomain::kU8;
  ColorSpace color = ColorSpace::kRGB;

  ImagePlane() = default;
  ImagePlane(int w, int h, ValueDomain d = ValueDomain::kU8, ColorSpace c = ColorSpace::kRGB)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0), domain(d), color(c) {}

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Single-channel image, used for luminance.
struct LumaPlane {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Mean RGB of the DIV2K training set in [0, 1] units.
inline constexpr std::array<double, 3> kDiv2kMeanRgb = {0.4488, 0.4371, 0.4040};

inline ImagePlane read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw DataError("cannot read PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  ImagePlane out(static_cast<int>(img.width), static_cast<int>(img.height));
  std::copy(buffer.begin(), buffer.end(), out.data.begin());
  return out;
}

/// Writes an 8-bit RGB PNG. Samples must already be integral and in 0..255.
inline void write_png(const std::filesystem::path& path, const ImagePlane& image) {
  if (image.domain != ValueDomain::kU8 || image.color != ColorSpace::kRGB)
    throw DataError("write_png needs an 8-bit RGB image");
  std::vector<png_byte> buffer(image.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double v = image.data[i];
    if (v < 0.0 || v > 255.0 || v != std::floor(v)) throw DataError("write_png: sample out of 8-bit range");
    buffer[i] = static_cast<png_byte>(v);
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buffer.data(), 0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
}

/// 0..255 integers -> [0, 1].
inline ImagePlane to_unit(const ImagePlane& img) {
  if (img.domain != ValueDomain::kU8) throw DataError("to_unit expects an 8-bit image");
  ImagePlane out = img;
  for (double& v : out.data) v /= 255.0;
  out.domain = ValueDomain::kUnit;
  return out;
}

/// [0, 1] -> 0..255 with rounding to nearest and clamping. This is the one
/// place where values are clipped.
inline ImagePlane quantize_u8(const ImagePlane& img) {
  ImagePlane out = img;
  const double scale = img.domain == ValueDomain::kU8 ? 1.0 : 255.0;
  if (img.domain == ValueDomain::kMeanSubtracted) throw DataError("quantize_u8: add the mean back first");
  for (double& v : out.data) v = std::clamp(std::round(v * scale), 0.0, 255.0);
  out.domain = ValueDomain::kU8;
  return out;
}

inline ImagePlane mean_subtract(const ImagePlane& img, const std::array<double, 3>& mean) {
  if (img.domain != ValueDomain::kUnit) throw DataError("mean_subtract expects a [0, 1] image");
  ImagePlane out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= mean[i % 3];
  out.domain = ValueDomain::kMeanSubtracted;
  return out;
}

inline ImagePlane mean_add(const ImagePlane& img, const std::array<double, 3>& mean) {
  if (img.domain != ValueDomain::kMeanSubtracted) throw DataError("mean_add expects a mean-subtracted image");
  ImagePlane out = img;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += mean[i % 3];
  out.domain = ValueDomain::kUnit;
  return out;
}

/// BT.601 studio-swing luma of an 8-bit RGB image:
/// Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255.
inline LumaPlane rgb_to_y(const ImagePlane& img) {
  if (img.color != ColorSpace::kRGB) throw DataError("rgb_to_y expects an RGB image");
  if (img.domain != ValueDomain::kU8) throw DataError("rgb_to_y expects 0..255 samples");
  LumaPlane y{img.width, img.height, std::vector<double>(static_cast<std::size_t>(img.width) * img.height)};
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    const double r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
    y.data[i] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
  }
  return y;
}

inline ImagePlane crop(const ImagePlane& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > img.width || y0 + h > img.height)
    throw DataError("crop window outside image");
  ImagePlane out(w, h, img.domain, img.color);
  for (int y = 0; y < h; ++y)
    std::copy_n(img.data.begin() + (static_cast<std::ptrdiff_t>(y0 + y) * img.width + x0) * 3, w * 3,
                out.data.begin() + static_cast<std::ptrdiff_t>(y) * w * 3);
  return out;
}

/// Crops so both dimensions are multiples of `scale` (top-left anchored).
inline ImagePlane modcrop(const ImagePlane& img, int scale) {
  return crop(img, 0, 0, img.width - img.width % scale, img.height - img.height % scale);
}

/// Horizontal mirror.
inline ImagePlane flip_horizontal(const ImagePlane& img) {
  ImagePlane out(img.width, img.height, img.domain, img.color);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

/// Rotates counter-clockwise by k * 90 degrees.
inline ImagePlane rotate90(const ImagePlane& img, int k) {
  k = ((k % 4) + 4) % 4;
  ImagePlane cur = img;
  for (int r = 0; r < k; ++r) {
    ImagePlane next(cur.height, cur.width, cur.domain, cur.color);
    for (int y = 0; y < next.height; ++y)
      for (int x = 0; x < next.width; ++x)
        for (int c = 0; c < 3; ++c) next.at(x, y, c) = cur.at(cur.width - 1 - y, x, c);
    cur = std::move(next);
  }
  return cur;
}

/// Writes `img` into batch slot `n` of an n x 3 x h x w tensor.
template <typename T>
void store_image(Tensor<T>& t, std::int64_t n, const ImagePlane& img) {
  const Shape s = t.shape();
  if (s.c != 3 || s.h != img.height || s.w != img.width || n >= s.n)
    throw ShapeError("store_image: image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     " does not fit tensor " + s.str());
  auto d = t.mutable_data();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) d[t.index(n, c, y, x)] = static_cast<T>(img.at(x, y, c));
}

template <typename T>
Tensor<T> image_to_tensor(const ImagePlane& img) {
  Tensor<T> t(Shape{1, 3, img.height, img.width});
  store_image(t, 0, img);
  return t;
}

template <typename T>
ImagePlane tensor_to_image(const Tensor<T>& t, std::int64_t n, ValueDomain domain) {
  const Shape s = t.shape();
  if (s.c != 3) throw ShapeError("tensor_to_image: expected 3 channels, got " + s.str());
  ImagePlane img(static_cast<int>(s.w), static_cast<int>(s.h), domain);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) img.at(x, y, c) = static_cast<double>(t.at(n, c, y, x));
  return img;
}

}  // namespace csfm
