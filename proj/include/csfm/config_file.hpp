// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "csfm/train.hpp"

namespace csfm {

// Flat `key = value` text, one pair per line, `#` starts a comment.

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename N>
N parse_number(std::string_view key, std::string_view text) {
  N value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" + std::string(text) + "'");
}

template <typename N>
std::string format_number(N value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(TrainConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename N>
Field number_field(N TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) { c.*member = parse_number<N>(k, v); },
          [member](const TrainConfig& c) { return format_number(c.*member); }};
}

template <typename N, typename Owner>
Field nested_number(Owner TrainConfig::*owner, N Owner::*member) {
  return {[owner, member](TrainConfig& c, std::string_view k, std::string_view v) {
            (c.*owner).*member = parse_number<N>(k, v);
          },
          [owner, member](const TrainConfig& c) { return format_number((c.*owner).*member); }};
}

inline Field bool_field(bool TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) { c.*member = parse_bool(k, v); },
          [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

inline Field string_field(std::string TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view, std::string_view v) { c.*member = std::string(v); },
          [member](const TrainConfig& c) { return c.*member; }};
}

inline Field mean_field(int channel) {
  return {[channel](TrainConfig& c, std::string_view k, std::string_view v) {
            c.mean_rgb[channel] = parse_number<double>(k, v);
          },
          [channel](const TrainConfig& c) { return format_number(c.mean_rgb[channel]); }};
}

// Ordered so serialisation is stable.
inline const std::map<std::string, Field>& config_fields() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    f["scale"] = nested_number(&TrainConfig::model, &CsfmConfig::scale);
    f["channels"] = nested_number(&TrainConfig::model, &CsfmConfig::channels);
    f["modules"] = nested_number(&TrainConfig::model, &CsfmConfig::modules);
    f["blocks"] = nested_number(&TrainConfig::model, &CsfmConfig::blocks);
    f["reduction"] = nested_number(&TrainConfig::model, &CsfmConfig::reduction);
    f["expansion"] = nested_number(&TrainConfig::model, &CsfmConfig::expansion);
    f["variant"] = {[](TrainConfig& c, std::string_view, std::string_view v) { c.model.variant = parse_variant(v); },
                    [](const TrainConfig& c) { return std::string(to_string(c.model.variant)); }};
    f["patch_size"] = number_field(&TrainConfig::patch_size);
    f["batch_size"] = number_field(&TrainConfig::batch_size);
    f["iterations"] = number_field(&TrainConfig::iterations);
    f["learning_rate"] = number_field(&TrainConfig::learning_rate);
    f["lr_first_milestone"] = number_field(&TrainConfig::lr_first_milestone);
    f["lr_period"] = number_field(&TrainConfig::lr_period);
    f["desk_mode"] = bool_field(&TrainConfig::desk_mode);
    f["beta1"] = nested_number(&TrainConfig::adam, &AdamSettings::beta1);
    f["beta2"] = nested_number(&TrainConfig::adam, &AdamSettings::beta2);
    f["epsilon"] = nested_number(&TrainConfig::adam, &AdamSettings::epsilon);
    f["augment_flip"] = bool_field(&TrainConfig::augment_flip);
    f["augment_rotate"] = bool_field(&TrainConfig::augment_rotate);
    f["seed"] = number_field(&TrainConfig::seed);
    f["train_dir"] = string_field(&TrainConfig::train_dir);
    f["eval_dir"] = string_field(&TrainConfig::eval_dir);
    f["output_dir"] = string_field(&TrainConfig::output_dir);
    f["checkpoint_every"] = number_field(&TrainConfig::checkpoint_every);
    f["mean_r"] = mean_field(0);
    f["mean_g"] = mean_field(1);
    f["mean_b"] = mean_field(2);
    return f;
  }();
  return fields;
}

}  // namespace detail

/// Parses config text on top of the defaults and validates the result.
inline TrainConfig parse_config(std::string_view text) {
  TrainConfig cfg;
  const auto& fields = detail::config_fields();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto it = fields.find(std::string(key));
    if (it == fields.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    it->second.set(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

inline std::string serialize_config(const TrainConfig& cfg) {
  std::ostringstream os;
  for (const auto& [key, field] : detail::config_fields()) os << key << " = " << field.get(cfg) << '\n';
  return os.str();
}

inline TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace csfm
