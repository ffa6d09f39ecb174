// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "csfm/errors.hpp"

namespace csfm {

/// Residual block flavour. BR is the plain residual block; CAR and SAR keep a
/// single attention unit; CSAR fuses both.
enum class BlockVariant { kBR, kCAR, kSAR, kCSAR };

inline std::string_view to_string(BlockVariant v) {
  switch (v) {
    case BlockVariant::kBR: return "BR";
    case BlockVariant::kCAR: return "CAR";
    case BlockVariant::kSAR: return "SAR";
    case BlockVariant::kCSAR: return "CSAR";
  }
  return "?";
}

inline BlockVariant parse_variant(std::string_view s) {
  if (s == "BR") return BlockVariant::kBR;
  if (s == "CAR") return BlockVariant::kCAR;
  if (s == "SAR") return BlockVariant::kSAR;
  if (s == "CSAR") return BlockVariant::kCSAR;
  throw ConfigError("unknown block variant '" + std::string(s) + "' (expected BR, CAR, SAR or CSAR)");
}

inline bool has_channel_attention(BlockVariant v) { return v == BlockVariant::kCAR || v == BlockVariant::kCSAR; }
inline bool has_spatial_attention(BlockVariant v) { return v == BlockVariant::kSAR || v == BlockVariant::kCSAR; }

/// Architecture hyperparameters. Defaults are the full-size network.
struct CsfmConfig {
  int scale = 4;
  int channels = 64;
  int modules = 8;     // M, FMM modules
  int blocks = 16;     // B, residual blocks per module
  int reduction = 16;  // r, channel-attention bottleneck ratio
  int expansion = 2;   // gamma, spatial-attention widening ratio
  BlockVariant variant = BlockVariant::kCSAR;

  void validate() const {
    if (scale != 2 && scale != 3 && scale != 4)
      throw ConfigError("scale must be 2, 3 or 4, got " + std::to_string(scale));
    if (channels < 1) throw ConfigError("channels must be positive");
    if (modules < 1) throw ConfigError("modules (M) must be at least 1");
    if (blocks < 1) throw ConfigError("blocks (B) must be at least 1");
    if (reduction < 1) throw ConfigError("reduction (r) must be positive");
    if (channels % reduction != 0)
      throw ConfigError("channels (" + std::to_string(channels) + ") must be divisible by reduction (" +
                        std::to_string(reduction) + ")");
    if (expansion < 1) throw ConfigError("expansion (gamma) must be positive");
  }

  friend bool operator==(const CsfmConfig&, const CsfmConfig&) = default;
};

}  // namespace csfm
