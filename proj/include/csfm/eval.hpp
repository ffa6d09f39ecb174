// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "csfm/checkpoint.hpp"
#include "csfm/data.hpp"
#include "csfm/metrics.hpp"
#include "csfm/model.hpp"

namespace csfm {

/// Network inference on an 8-bit RGB image: mean-subtract, forward, add the
/// mean back, clamp and round to 8 bits.
template <typename T>
ImagePlane super_resolve(const CsfmNetwork<T>& net, const ImagePlane& lr, const std::array<double, 3>& mean) {
  const auto x = image_to_tensor<T>(mean_subtract(to_unit(lr), mean));
  const auto y = csfm_forward(x, net);
  return quantize_u8(mean_add(tensor_to_image(y, 0, ValueDomain::kMeanSubtracted), mean));
}

inline ImagePlane bicubic_upscale(const ImagePlane& lr, int scale) {
  return bicubic_resize(lr, lr.width * scale, lr.height * scale);
}

inline std::array<double, 3> checkpoint_mean(const Checkpoint& ck) {
  return {ck.mean_rgb[0], ck.mean_rgb[1], ck.mean_rgb[2]};
}

struct EvalRow {
  std::string image;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;

  /// `image<TAB>psnr<TAB>ssim` rows followed by an `average` row.
  std::string to_table() const {
    std::ostringstream os;
    os << "image\tpsnr\tssim\n";
    auto put = [&os](const std::string& name, double p, double s) {
      os << name << '\t';
      if (std::isinf(p)) os << "inf";
      else os << std::fixed << std::setprecision(4) << p;
      os << '\t' << std::fixed << std::setprecision(6) << s << '\n';
    };
    for (const auto& r : rows) put(r.image, r.psnr, r.ssim);
    put("average", mean_psnr, mean_ssim);
    return os.str();
  }
};

using Upscaler = std::function<ImagePlane(const ImagePlane& lr)>;

/// Benchmark protocol: modcrop the HR image, bicubic-downscale it to 8 bits,
/// upscale with `upscale`, and score luminance with `crop` border pixels
/// removed.
inline EvalReport evaluate(const std::vector<NamedImage>& images, int scale, int crop_px, const Upscaler& upscale) {
  if (images.empty()) throw DataError("evaluate: no images");
  EvalReport report;
  for (const auto& img : images) {
    const ImagePlane hr = modcrop(img.image, scale);
    const ImagePlane lr = make_lr(img.image, scale);
    const ImagePlane sr = upscale(lr);
    if (sr.width != hr.width || sr.height != hr.height)
      throw DataError("upscaled " + img.name + " has the wrong size");
    const LumaPlane y_hr = rgb_to_y(hr);
    const LumaPlane y_sr = rgb_to_y(sr);
    report.rows.push_back({img.name, psnr(y_sr, y_hr, crop_px), ssim(y_sr, y_hr, crop_px)});
  }
  for (const auto& r : report.rows) {
    report.mean_psnr += r.psnr;
    report.mean_ssim += r.ssim;
  }
  report.mean_psnr /= static_cast<double>(report.rows.size());
  report.mean_ssim /= static_cast<double>(report.rows.size());
  return report;
}

inline EvalReport evaluate_bicubic(const std::vector<NamedImage>& images, int scale, int crop_px) {
  return evaluate(images, scale, crop_px, [scale](const ImagePlane& lr) { return bicubic_upscale(lr, scale); });
}

inline EvalReport evaluate_checkpoint(const Checkpoint& ck, const std::vector<NamedImage>& images, int crop_px) {
  const auto net = network_from_checkpoint<float>(ck);
  const auto mean = checkpoint_mean(ck);
  return evaluate(images, ck.config.scale, crop_px,
                  [&net, &mean](const ImagePlane& lr) { return super_resolve(net, lr, mean); });
}

// ---------------------------------------------------------------------------
// M x B sweeps

struct SweepPoint {
  int modules = 0;
  int blocks = 0;
  double psnr = 0.0;

  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

/// `M<TAB>B<TAB>psnr` lines; PSNR printed with round-trip precision.
inline std::string format_sweep(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "M\tB\tpsnr\n";
  for (const auto& p : points) os << p.modules << '\t' << p.blocks << '\t' << std::setprecision(17) << p.psnr << '\n';
  return os.str();
}

inline std::vector<SweepPoint> parse_sweep(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<SweepPoint> out;
  if (!std::getline(is, line) || line != "M\tB\tpsnr") throw DataError("sweep table: missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SweepPoint p;
    std::string psnr_text;
    if (!(ls >> p.modules >> p.blocks >> psnr_text)) throw DataError("sweep table: malformed row '" + line + "'");
    p.psnr = psnr_text == "inf" ? INFINITY : std::stod(psnr_text);
    out.push_back(p);
  }
  return out;
}

}  // namespace csfm
