// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace csfm {

/// Process-wide override of the worker cap; 0 means none.
inline int& worker_override() {
  static int value = 0;
  return value;
}

/// Worker cap: the override if set, else `CSFM_THREADS` if set and positive,
/// else hardware concurrency.
inline int worker_count() {
  if (worker_override() > 0) return worker_override();
  static const int count = [] {
    if (const char* env = std::getenv("CSFM_THREADS")) {
      try {
        const int n = std::stoi(env);
        if (n > 0) return n;
      } catch (...) {
      }
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  }();
  return count;
}

/// Runs fn(i) for i in [0, count). Each index is handled by exactly one
/// worker, so callers that write disjoint outputs per index get results that
/// do not depend on the worker count.
template <typename Fn>
void parallel_for(std::int64_t count, Fn&& fn, std::int64_t min_per_worker = 1) {
  const std::int64_t workers = std::min<std::int64_t>(
      worker_count(), std::max<std::int64_t>(1, count / std::max<std::int64_t>(1, min_per_worker)));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::int64_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (std::int64_t i = 0; i < std::min(count, chunk); ++i) fn(i);
  for (auto& t : pool) t.join();
}

}  // namespace csfm
