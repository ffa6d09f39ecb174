// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "csfm/model.hpp"
#include "csfm/optim.hpp"

namespace csfm {

// Binary layout, all integers and floats little-endian:
//
//   magic        8 bytes  "CSFMCKPT"
//   version      u32      kCheckpointVersion
//   config       7 x i32  scale, channels, modules, blocks, reduction, expansion, variant
//   mean_rgb     3 x f32  per-channel mean in [0, 1] units
//   param_count  u64
//   per param:   name (u32 byte length + UTF-8 bytes), rank u32, rank x i64 dims,
//                product(dims) x f32 values
//   has_optim    u8
//   if has_optim: step u64, beta1 f64, beta2 f64, epsilon f64, base_lr f64,
//                first_milestone i64, period i64, then per param (same order)
//                first moments f32[numel] followed by second moments f32[numel]
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'C', 'S', 'F', 'M', 'C', 'K', 'P', 'T'};

struct ParamEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct OptimSnapshot {
  AdamSettings adam;
  LrSchedule schedule;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

struct Checkpoint {
  CsfmConfig config;
  std::array<float, 3> mean_rgb{0.f, 0.f, 0.f};
  std::vector<ParamEntry> params;
  std::optional<OptimSnapshot> optim;

  std::int64_t scalar_count() const {
    std::int64_t total = 0;
    for (const auto& p : params) total += static_cast<std::int64_t>(p.values.size());
    return total;
  }

  const ParamEntry* find(const std::string& name) const {
    for (const auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }
};

template <typename T>
Checkpoint make_checkpoint(const CsfmNetwork<T>& net, std::array<float, 3> mean_rgb,
                           const OptimState<T>* optim = nullptr) {
  Checkpoint ck;
  ck.config = net.config;
  ck.mean_rgb = mean_rgb;
  for (const auto& p : net.parameters()) {
    auto d = p.tensor.data();
    ck.params.push_back({p.name, p.tensor.shape(), std::vector<float>(d.begin(), d.end())});
  }
  if (optim != nullptr) {
    OptimSnapshot s;
    s.adam = optim->adam;
    s.schedule = optim->schedule;
    s.step = optim->step;
    for (const auto& m : optim->m) s.m.emplace_back(m.begin(), m.end());
    for (const auto& v : optim->v) s.v.emplace_back(v.begin(), v.end());
    ck.optim = std::move(s);
  }
  return ck;
}

/// Rebuilds a network; every parameter must be present with a matching shape.
template <typename T>
CsfmNetwork<T> network_from_checkpoint(const Checkpoint& ck) {
  CsfmNetwork<T> net = make_network<T>(ck.config, Init::kZero);
  auto params = net.parameters();
  if (params.size() != ck.params.size())
    throw DataError("checkpoint has " + std::to_string(ck.params.size()) + " parameters, configuration needs " +
                    std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamEntry& e = ck.params[i];
    if (e.name != params[i].name || e.shape != params[i].tensor.shape())
      throw DataError("checkpoint parameter " + e.name + " " + e.shape.str() + " does not match expected " +
                      params[i].name + " " + params[i].tensor.shape().str());
    auto d = params[i].tensor.mutable_data();
    if (e.values.size() != d.size())
      throw DataError("checkpoint parameter " + e.name + " holds " + std::to_string(e.values.size()) +
                      " values, shape needs " + std::to_string(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = static_cast<T>(e.values[k]);
  }
  return net;
}

template <typename T>
OptimState<T> optim_from_checkpoint(const Checkpoint& ck) {
  if (!ck.optim) throw DataError("checkpoint carries no optimizer state");
  OptimState<T> s;
  s.adam = ck.optim->adam;
  s.schedule = ck.optim->schedule;
  s.step = ck.optim->step;
  for (const auto& m : ck.optim->m) s.m.emplace_back(m.begin(), m.end());
  for (const auto& v : ck.optim->v) s.v.emplace_back(v.begin(), v.end());
  return s;
}

namespace detail {

class ByteWriter {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    std::array<unsigned char, sizeof(U)> raw;
    std::memcpy(raw.data(), &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    bytes_.insert(bytes_.end(), raw.begin(), raw.end());
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void put_raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<unsigned char> take() { return std::move(bytes_); }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::array<unsigned char, sizeof(U)> raw;
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), sizeof(U), raw.begin());
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    pos_ += sizeof(U);
    U value;
    std::memcpy(&value, raw.data(), sizeof(U));
    return value;
  }
  std::string get_string() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    return s;
  }
  void expect_raw(const char* p, std::size_t n) {
    need(n);
    if (!std::equal(p, p + n, bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)))
      throw DataError("not a checkpoint file (bad magic)");
    pos_ += n;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("truncated checkpoint");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.put_raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put(kCheckpointVersion);
  const CsfmConfig& c = ck.config;
  for (int v : {c.scale, c.channels, c.modules, c.blocks, c.reduction, c.expansion, static_cast<int>(c.variant)})
    w.put(static_cast<std::int32_t>(v));
  for (float m : ck.mean_rgb) w.put(m);
  w.put(static_cast<std::uint64_t>(ck.params.size()));
  for (const auto& p : ck.params) {
    w.put_string(p.name);
    w.put(std::uint32_t{4});
    for (std::int64_t d : {p.shape.n, p.shape.c, p.shape.h, p.shape.w}) w.put(d);
    for (float v : p.values) w.put(v);
  }
  w.put(static_cast<std::uint8_t>(ck.optim ? 1 : 0));
  if (ck.optim) {
    const OptimSnapshot& o = *ck.optim;
    w.put(static_cast<std::uint64_t>(o.step));
    w.put(o.adam.beta1);
    w.put(o.adam.beta2);
    w.put(o.adam.epsilon);
    w.put(o.schedule.base);
    w.put(o.schedule.first_milestone);
    w.put(o.schedule.period);
    for (std::size_t k = 0; k < ck.params.size(); ++k) {
      for (float v : o.m[k]) w.put(v);
      for (float v : o.v[k]) w.put(v);
    }
  }
  return w.take();
}

inline Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  detail::ByteReader r(bytes);
  r.expect_raw(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  CsfmConfig& c = ck.config;
  c.scale = r.get<std::int32_t>();
  c.channels = r.get<std::int32_t>();
  c.modules = r.get<std::int32_t>();
  c.blocks = r.get<std::int32_t>();
  c.reduction = r.get<std::int32_t>();
  c.expansion = r.get<std::int32_t>();
  const auto variant = r.get<std::int32_t>();
  if (variant < 0 || variant > 3) throw DataError("checkpoint has unknown block variant " + std::to_string(variant));
  c.variant = static_cast<BlockVariant>(variant);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint configuration invalid: ") + e.what());
  }
  for (float& m : ck.mean_rgb) m = r.get<float>();
  const auto count = r.get<std::uint64_t>();
  if (count > (1u << 24)) throw DataError("implausible parameter count in checkpoint");
  for (std::uint64_t i = 0; i < count; ++i) {
    ParamEntry p;
    p.name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    if (rank != 4) throw DataError("parameter " + p.name + " has rank " + std::to_string(rank) + ", expected 4");
    p.shape.n = r.get<std::int64_t>();
    p.shape.c = r.get<std::int64_t>();
    p.shape.h = r.get<std::int64_t>();
    p.shape.w = r.get<std::int64_t>();
    if (p.shape.n < 0 || p.shape.c < 0 || p.shape.h < 0 || p.shape.w < 0 || p.shape.numel() > (1ll << 32))
      throw DataError("parameter " + p.name + " has invalid shape " + p.shape.str());
    p.values.resize(static_cast<std::size_t>(p.shape.numel()));
    for (float& v : p.values) v = r.get<float>();
    ck.params.push_back(std::move(p));
  }
  if (r.get<std::uint8_t>() != 0) {
    OptimSnapshot o;
    o.step = static_cast<std::int64_t>(r.get<std::uint64_t>());
    o.adam.beta1 = r.get<double>();
    o.adam.beta2 = r.get<double>();
    o.adam.epsilon = r.get<double>();
    o.schedule.base = r.get<double>();
    o.schedule.first_milestone = r.get<std::int64_t>();
    o.schedule.period = r.get<std::int64_t>();
    if (o.schedule.period < 1) throw DataError("checkpoint learning-rate period must be positive");
    for (const auto& p : ck.params) {
      std::vector<float> m(p.values.size()), v(p.values.size());
      for (float& x : m) x = r.get<float>();
      for (float& x : v) x = r.get<float>();
      o.m.push_back(std::move(m));
      o.v.push_back(std::move(v));
    }
    ck.optim = std::move(o);
  }
  if (!r.at_end()) throw DataError("trailing bytes after checkpoint");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace csfm
