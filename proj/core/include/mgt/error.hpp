// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mgt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating graph input. The message carries the
/// location (e.g. "edges[3]") of the offending item.
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes or index arguments do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value, unknown key, or config/data mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, non-convergence, or a violated numeric precondition.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgt
