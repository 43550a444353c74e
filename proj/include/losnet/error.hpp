// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace losnet {

/// Shapes or extents of operands disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A tensor operation saw or produced NaN/Inf.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A cached forward pass no longer matches the layer it came from.
class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training diverged or could not start.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data or inconsistent wrangling state.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace losnet
