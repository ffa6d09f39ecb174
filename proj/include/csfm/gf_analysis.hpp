// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csfm/checkpoint.hpp"

namespace csfm {

/// Per gated-fusion node: mean weight norm of the current module's own
/// features (short-term) and of all earlier module outputs (long-term),
/// both divided by the largest value in the report.
struct GfNormReport {
  struct Entry {
    int module = 0;
    double short_term = 0.0;
    std::optional<double> long_term;  // absent for the first module
  };
  std::vector<Entry> entries;

  std::string to_table() const {
    std::ostringstream os;
    os << std::setprecision(17) << "module\tshort_term\tlong_term\n";
    for (const auto& e : entries) {
      os << e.module << '\t' << e.short_term << '\t';
      if (e.long_term) os << *e.long_term;
      else os << '-';
      os << '\n';
    }
    return os.str();
  }
};

/// Norm of each gate input feature map n: sqrt(sum_i W[i, n, 0, 0]^2) over
/// output channels i.
inline std::vector<double> gate_input_norms(const ParamEntry& gate) {
  const Shape s = gate.shape;
  if (s.h != 1 || s.w != 1) throw DataError("gate weight " + gate.name + " is not 1x1");
  std::vector<double> norms(static_cast<std::size_t>(s.c), 0.0);
  for (std::int64_t i = 0; i < s.n; ++i)
    for (std::int64_t n = 0; n < s.c; ++n) {
      const double w = gate.values[static_cast<std::size_t>(i * s.c + n)];
      norms[static_cast<std::size_t>(n)] += w * w;
    }
  for (double& q : norms) q = std::sqrt(q);
  return norms;
}

inline GfNormReport gf_weight_norms(const Checkpoint& ck) {
  const std::int64_t c = ck.config.channels;
  GfNormReport report;
  double peak = 0.0;
  for (int m = 1; m <= ck.config.modules; ++m) {
    const std::string name = "fmm" + std::to_string(m) + ".gate.weight";
    const ParamEntry* gate = ck.find(name);
    if (gate == nullptr) throw DataError("checkpoint is missing " + name);
    if (gate->shape != Shape{c, m * c, 1, 1})
      throw DataError(name + " has shape " + gate->shape.str() + ", expected " + Shape{c, m * c, 1, 1}.str());
    const auto q = gate_input_norms(*gate);
    GfNormReport::Entry e;
    e.module = m;
    double s = 0.0;
    for (std::int64_t n = 0; n < c; ++n) s += q[static_cast<std::size_t>(n)];
    e.short_term = s / static_cast<double>(c);
    peak = std::max(peak, e.short_term);
    if (m > 1) {
      double l = 0.0;
      for (std::size_t n = static_cast<std::size_t>(c); n < q.size(); ++n) l += q[n];
      e.long_term = l / static_cast<double>(q.size() - static_cast<std::size_t>(c));
      peak = std::max(peak, *e.long_term);
    }
    report.entries.push_back(e);
  }
  if (peak > 0.0) {
    for (auto& e : report.entries) {
      e.short_term /= peak;
      if (e.long_term) *e.long_term /= peak;
    }
  }
  return report;
}

}  // namespace csfm
