// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iostream>
#include <stdexcept>
#include <string>

namespace csfm {

/// Incompatible tensor shapes or channel counts.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad configuration key or value; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable or malformed input data; maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required; maps to CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void warn(const std::string& message) {
  std::cerr << "warning: " << message << '\n';
}

}  // namespace csfm
