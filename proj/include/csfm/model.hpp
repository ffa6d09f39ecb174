// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csfm/config.hpp"
#include "csfm/nn.hpp"
#include "csfm/ops.hpp"
#include "csfm/rng.hpp"

namespace csfm {

/// Squeeze (C -> C/r) and excite (C/r -> C) 1x1 convs applied to channel means.
template <typename T>
struct ChannelAttention {
  ConvParams<T> squeeze;
  ConvParams<T> excite;
};

/// Expand (C -> gamma*C) and collapse (gamma*C -> 1) 1x1 convs applied per pixel.
template <typename T>
struct SpatialAttention {
  ConvParams<T> expand;
  ConvParams<T> collapse;
};

template <typename T>
struct CsarBlock {
  ConvParams<T> body1;  // 3x3, followed by ReLU
  ConvParams<T> body2;  // 3x3
  std::optional<ChannelAttention<T>> ca;
  std::optional<SpatialAttention<T>> sa;
  std::optional<ConvParams<T>> fuse;  // 1x1, 2C -> C; CSAR only
};

/// B residual blocks followed by the gated-fusion 1x1 conv. Module `index`
/// (1-based) fuses its blockchain output with all `index - 1` earlier module
/// outputs, so the gate takes index * C input channels.
template <typename T>
struct FmmModule {
  int index = 1;
  std::vector<CsarBlock<T>> blocks;
  ConvParams<T> gate;
};

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
struct CsfmNetwork {
  CsfmConfig config;
  ConvParams<T> head;     // 3x3, RGB -> C (initial feature extraction)
  ConvParams<T> expand;   // 3x3, C -> C, produces the first module input
  std::vector<FmmModule<T>> modules;
  ConvParams<T> tail;     // 3x3, C -> C, before the global residual
  std::vector<ConvParams<T>> upsample;  // 3x3 convs each followed by pixel shuffle
  ConvParams<T> output;   // 3x3, C -> RGB

  /// Every tensor in a fixed order with unique dotted names.
  std::vector<NamedParam<T>> parameters() const {
    std::vector<NamedParam<T>> out;
    auto add = [&out](const std::string& prefix, const ConvParams<T>& p) {
      out.push_back({prefix + ".weight", p.weight});
      out.push_back({prefix + ".bias", p.bias});
    };
    add("head", head);
    add("expand", expand);
    for (const auto& m : modules) {
      const std::string mp = "fmm" + std::to_string(m.index);
      for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& blk = m.blocks[b];
        const std::string bp = mp + ".block" + std::to_string(b + 1);
        add(bp + ".body1", blk.body1);
        add(bp + ".body2", blk.body2);
        if (blk.ca) {
          add(bp + ".ca.squeeze", blk.ca->squeeze);
          add(bp + ".ca.excite", blk.ca->excite);
        }
        if (blk.sa) {
          add(bp + ".sa.expand", blk.sa->expand);
          add(bp + ".sa.collapse", blk.sa->collapse);
        }
        if (blk.fuse) add(bp + ".fuse", *blk.fuse);
      }
      add(mp + ".gate", m.gate);
    }
    add("tail", tail);
    for (std::size_t i = 0; i < upsample.size(); ++i) add("upsample" + std::to_string(i + 1), upsample[i]);
    add("output", output);
    return out;
  }

  std::int64_t parameter_count() const {
    std::int64_t total = 0;
    for (const auto& p : parameters()) total += p.tensor.numel();
    return total;
  }

  void set_requires_grad(bool flag) {
    for (auto& p : parameters()) p.tensor.set_requires_grad(flag);
  }

  void zero_grad() {
    for (auto& p : parameters()) p.tensor.zero_grad();
  }
};

/// Upsampling stages as (output channels, shuffle factor) for a given scale.
/// x4 is two cascaded x2 stages.
inline std::vector<std::pair<std::int64_t, std::int64_t>> upsample_stages(const CsfmConfig& cfg) {
  const std::int64_t c = cfg.channels;
  if (cfg.scale == 4) return {{4 * c, 2}, {4 * c, 2}};
  return {{c * cfg.scale * cfg.scale, cfg.scale}};
}

enum class Init { kZero, kHeNormal };

namespace detail {

template <typename T>
ConvParams<T> make_conv(std::int64_t in, std::int64_t out, std::int64_t k, Init init, Rng& rng) {
  auto p = ConvParams<T>::zeros(in, out, k);
  if (init == Init::kHeNormal) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(in * k * k));
    for (auto& v : p.weight.mutable_data()) v = static_cast<T>(std_dev * rng.normal());
  }
  return p;
}

}  // namespace detail

/// Builds the network. He-normal init draws weights with std sqrt(2 / fan_in)
/// and zero biases; zero init sets every scalar to 0.
template <typename T>
CsfmNetwork<T> make_network(const CsfmConfig& cfg, Init init, std::uint64_t seed = 0) {
  cfg.validate();
  Rng rng(seed);
  const std::int64_t c = cfg.channels;
  auto conv = [&](std::int64_t in, std::int64_t out, std::int64_t k) {
    return detail::make_conv<T>(in, out, k, init, rng);
  };
  CsfmNetwork<T> net;
  net.config = cfg;
  net.head = conv(3, c, 3);
  net.expand = conv(c, c, 3);
  for (int m = 1; m <= cfg.modules; ++m) {
    FmmModule<T> mod;
    mod.index = m;
    for (int b = 0; b < cfg.blocks; ++b) {
      CsarBlock<T> blk;
      blk.body1 = conv(c, c, 3);
      blk.body2 = conv(c, c, 3);
      if (has_channel_attention(cfg.variant))
        blk.ca = ChannelAttention<T>{conv(c, c / cfg.reduction, 1), conv(c / cfg.reduction, c, 1)};
      if (has_spatial_attention(cfg.variant))
        blk.sa = SpatialAttention<T>{conv(c, cfg.expansion * c, 1), conv(cfg.expansion * c, 1, 1)};
      if (cfg.variant == BlockVariant::kCSAR) blk.fuse = conv(2 * c, c, 1);
      mod.blocks.push_back(std::move(blk));
    }
    mod.gate = conv(m * c, c, 1);
    net.modules.push_back(std::move(mod));
  }
  net.tail = conv(c, c, 3);
  for (auto [out_c, s] : upsample_stages(cfg)) {
    (void)s;
    net.upsample.push_back(conv(c, out_c, 3));
  }
  net.output = conv(c, 3, 3);
  return net;
}

/// Analytic scalar count for a configuration, computed layer by layer without
/// building the network.
inline std::int64_t count_params(const CsfmConfig& cfg) {
  cfg.validate();
  auto conv = [](std::int64_t in, std::int64_t out, std::int64_t k) { return out * in * k * k + out; };
  const std::int64_t c = cfg.channels;
  std::int64_t block = 2 * conv(c, c, 3);
  if (has_channel_attention(cfg.variant)) block += conv(c, c / cfg.reduction, 1) + conv(c / cfg.reduction, c, 1);
  if (has_spatial_attention(cfg.variant)) block += conv(c, cfg.expansion * c, 1) + conv(cfg.expansion * c, 1, 1);
  if (cfg.variant == BlockVariant::kCSAR) block += conv(2 * c, c, 1);
  std::int64_t total = conv(3, c, 3) + conv(c, c, 3) + conv(c, c, 3) + conv(c, 3, 3);
  for (std::int64_t m = 1; m <= cfg.modules; ++m) total += cfg.blocks * block + conv(m * c, c, 1);
  for (auto [out_c, s] : upsample_stages(cfg)) {
    (void)s;
    total += conv(c, out_c, 3);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Forward pass

/// Channel attention: u * sigmoid(excite(relu(squeeze(mean_hw(u))))).
template <typename T>
Tensor<T> ca_unit(const Tensor<T>& u, const ChannelAttention<T>& p) {
  if (u.shape().c != p.squeeze.in_channels())
    throw ShapeError("ca_unit: input " + u.shape().str() + " expects " + std::to_string(p.squeeze.in_channels()) +
                     " channels");
  const auto z = global_avg_pool(u);
  const auto alpha = sigmoid(conv2d(relu(conv2d(z, p.squeeze, 0)), p.excite, 0));
  return mul(u, alpha);
}

/// Spatial attention mask, n x 1 x h x w in (0, 1).
template <typename T>
Tensor<T> spatial_mask(const Tensor<T>& u, const SpatialAttention<T>& p) {
  if (u.shape().c != p.expand.in_channels())
    throw ShapeError("sa_unit: input " + u.shape().str() + " expects " + std::to_string(p.expand.in_channels()) +
                     " channels");
  return sigmoid(conv2d(relu(conv2d(u, p.expand, 0)), p.collapse, 0));
}

template <typename T>
Tensor<T> sa_unit(const Tensor<T>& u, const SpatialAttention<T>& p) {
  return mul(u, spatial_mask(u, p));
}

/// Residual branch output U = body2(relu(body1(h))).
template <typename T>
Tensor<T> residual_features(const Tensor<T>& h, const CsarBlock<T>& blk) {
  return conv2d(relu(conv2d(h, blk.body1, 1)), blk.body2, 1);
}

/// One residual block of the given variant:
///   BR   h + U
///   CAR  h + CA(U)
///   SAR  h + SA(U)
///   CSAR h + fuse([CA(U), SA(U)])
template <typename T>
Tensor<T> block_variant(const Tensor<T>& h, const CsarBlock<T>& blk, BlockVariant variant) {
  const auto u = residual_features(h, blk);
  auto need = [](bool present, const char* what) {
    if (!present) throw ShapeError(std::string("block_variant: block has no ") + what + " parameters");
  };
  switch (variant) {
    case BlockVariant::kBR:
      return add(h, u);
    case BlockVariant::kCAR:
      need(blk.ca.has_value(), "channel attention");
      return add(h, ca_unit(u, *blk.ca));
    case BlockVariant::kSAR:
      need(blk.sa.has_value(), "spatial attention");
      return add(h, sa_unit(u, *blk.sa));
    case BlockVariant::kCSAR:
      need(blk.ca && blk.sa && blk.fuse, "channel/spatial attention and fusion");
      return add(h, conv2d(concat_channels(ca_unit(u, *blk.ca), sa_unit(u, *blk.sa)), *blk.fuse, 0));
  }
  throw ConfigError("block_variant: unknown variant");
}

template <typename T>
Tensor<T> csar_block(const Tensor<T>& h, const CsarBlock<T>& blk) {
  return block_variant(h, blk, BlockVariant::kCSAR);
}

/// Runs the blockchain on `p_prev`, then gates [H^B, P_1, ..., P_{m-1}].
template <typename T>
Tensor<T> fmm_forward(const Tensor<T>& p_prev, std::span<const Tensor<T>> history, const FmmModule<T>& mod,
                      BlockVariant variant) {
  if (static_cast<int>(history.size()) != mod.index - 1)
    throw ShapeError("fmm_forward: module " + std::to_string(mod.index) + " needs " +
                     std::to_string(mod.index - 1) + " earlier outputs, got " + std::to_string(history.size()));
  Tensor<T> h = p_prev;
  for (const auto& blk : mod.blocks) h = block_variant(h, blk, variant);
  std::vector<Tensor<T>> parts;
  parts.reserve(history.size() + 1);
  parts.push_back(h);
  parts.insert(parts.end(), history.begin(), history.end());
  return conv2d(concat_channels<T>(std::span<const Tensor<T>>(parts)), mod.gate, 0);
}

/// Full network on a mean-subtracted n x 3 x h x w batch; returns n x 3 x sh x sw.
template <typename T>
Tensor<T> csfm_forward(const Tensor<T>& x, const CsfmNetwork<T>& net) {
  if (x.shape().c != 3) throw ShapeError("csfm_forward: expected 3 input channels, got " + x.shape().str());
  const auto features = conv2d(x, net.head, 1);
  Tensor<T> p = conv2d(features, net.expand, 1);
  std::vector<Tensor<T>> history;
  history.reserve(net.modules.size());
  for (const auto& mod : net.modules) {
    p = fmm_forward<T>(p, std::span<const Tensor<T>>(history), mod, net.config.variant);
    history.push_back(p);
  }
  Tensor<T> y = add(conv2d(p, net.tail, 1), features);
  const auto stages = upsample_stages(net.config);
  for (std::size_t i = 0; i < stages.size(); ++i) y = pixel_shuffle(conv2d(y, net.upsample[i], 1), stages[i].second);
  return conv2d(y, net.output, 1);
}

/// Converts every parameter to another scalar type.
template <typename To, typename From>
CsfmNetwork<To> cast_network(const CsfmNetwork<From>& src) {
  CsfmNetwork<To> dst = make_network<To>(src.config, Init::kZero);
  auto from = src.parameters();
  auto to = dst.parameters();
  for (std::size_t i = 0; i < from.size(); ++i) {
    auto s = from[i].tensor.data();
    auto d = to[i].tensor.mutable_data();
    for (std::size_t k = 0; k < s.size(); ++k) d[k] = static_cast<To>(s[k]);
  }
  return dst;
}

}  // namespace csfm
