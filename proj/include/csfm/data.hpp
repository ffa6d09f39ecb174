// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "csfm/image.hpp"
#include "csfm/resize.hpp"
#include "csfm/rng.hpp"
#include "csfm/tensor.hpp"

namespace csfm {

struct NamedImage {
  std::string name;
  ImagePlane image;
};

/// All PNG files in `dir`, sorted by file name.
inline std::vector<NamedImage> load_png_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no PNG images in " + dir.string());
  std::vector<NamedImage> out;
  for (const auto& f : files) out.push_back({f.stem().string(), read_png(f)});
  return out;
}

/// Low-resolution counterpart: bicubic downscale of the modcropped HR image,
/// stored as 8-bit like a saved LR file would be.
inline ImagePlane make_lr(const ImagePlane& hr, int scale) {
  const ImagePlane base = modcrop(hr, scale);
  return bicubic_resize(base, base.width / scale, base.height / scale);
}

struct TrainingPair {
  std::string name;
  ImagePlane hr;  // modcropped, 8-bit
  ImagePlane lr;  // 8-bit
};

/// Aligned HR/LR pairs for one scale factor.
class Dataset {
 public:
  /// Images smaller than scale * patch on either side are skipped with a
  /// warning; an empty result is an error.
  static Dataset from_images(const std::vector<NamedImage>& images, int scale, int patch) {
    Dataset ds;
    ds.scale_ = scale;
    for (const auto& img : images) {
      if (img.image.width < scale * patch || img.image.height < scale * patch) {
        warn("skipping " + img.name + ": smaller than " + std::to_string(scale * patch) + " pixels");
        continue;
      }
      ds.pairs_.push_back({img.name, modcrop(img.image, scale), make_lr(img.image, scale)});
    }
    if (ds.pairs_.empty()) throw DataError("dataset is empty after filtering for patch size");
    return ds;
  }

  static Dataset from_directory(const std::filesystem::path& dir, int scale, int patch) {
    return from_images(load_png_dir(dir), scale, patch);
  }

  int scale() const { return scale_; }
  std::size_t size() const { return pairs_.size(); }
  const TrainingPair& operator[](std::size_t i) const { return pairs_[i]; }
  const std::vector<TrainingPair>& pairs() const { return pairs_; }

 private:
  int scale_ = 2;
  std::vector<TrainingPair> pairs_;
};

struct Augmentation {
  bool flip = false;
  int rotations = 0;  // counter-clockwise quarter turns
};

/// Flip first, then rotate.
inline ImagePlane apply_augmentation(const ImagePlane& img, const Augmentation& aug) {
  return rotate90(aug.flip ? flip_horizontal(img) : img, aug.rotations);
}

struct PatchPair {
  ImagePlane lr;
  ImagePlane hr;
};

/// LR patch at (x, y) and the HR patch covering the same area.
inline PatchPair crop_pair(const TrainingPair& pair, int scale, int x, int y, int patch) {
  return {crop(pair.lr, x, y, patch, patch), crop(pair.hr, scale * x, scale * y, scale * patch, scale * patch)};
}

template <typename T>
struct Batch {
  Tensor<T> lr;  // n x 3 x p x p, mean-subtracted [0, 1]
  Tensor<T> hr;  // n x 3 x sp x sp, mean-subtracted [0, 1]
};

struct SamplingOptions {
  int batch = 16;
  int patch = 48;
  bool flip = true;
  bool rotate = true;
  std::array<double, 3> mean = kDiv2kMeanRgb;
};

/// Draws `batch` random aligned patch pairs. Each pair independently gets a
/// horizontal flip with probability 1/2 and k quarter turns with k uniform in
/// {0, 1, 2, 3}; LR and HR always receive the same transform.
template <typename T>
Batch<T> sample_batch(const Dataset& ds, const SamplingOptions& opt, Rng& rng) {
  if (ds.size() == 0) throw DataError("sample_batch: empty dataset");
  const int s = ds.scale();
  Batch<T> b{Tensor<T>(Shape{opt.batch, 3, opt.patch, opt.patch}),
             Tensor<T>(Shape{opt.batch, 3, s * opt.patch, s * opt.patch})};
  for (int n = 0; n < opt.batch; ++n) {
    const auto& pair = ds[rng.below(ds.size())];
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.lr.width - opt.patch + 1)));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.lr.height - opt.patch + 1)));
    Augmentation aug;
    aug.flip = opt.flip && rng.coin();
    aug.rotations = opt.rotate ? static_cast<int>(rng.below(4)) : 0;
    const PatchPair pp = crop_pair(pair, s, x, y, opt.patch);
    store_image(b.lr, n, mean_subtract(to_unit(apply_augmentation(pp.lr, aug)), opt.mean));
    store_image(b.hr, n, mean_subtract(to_unit(apply_augmentation(pp.hr, aug)), opt.mean));
  }
  return b;
}

/// Per-channel mean of a set of 8-bit images in [0, 1] units, accumulated
/// image by image in a single streaming pass.
inline std::array<double, 3> dataset_mean(const std::vector<NamedImage>& images) {
  std::array<double, 3> sum{0, 0, 0};
  double count = 0;
  for (const auto& img : images) {
    if (img.image.domain != ValueDomain::kU8) throw DataError("dataset_mean expects 8-bit images");
    for (std::size_t i = 0; i < img.image.data.size(); ++i) sum[i % 3] += img.image.data[i];
    count += static_cast<double>(img.image.data.size() / 3);
  }
  if (count == 0) throw DataError("dataset_mean: no pixels");
  for (double& s : sum) s /= count * 255.0;
  return sum;
}

}  // namespace csfm
