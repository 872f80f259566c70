#pragma once

#include <stdexcept>
#include <string>

namespace tweezer {

/// Invalid user-supplied parameters (grid sizes, trap geometry, config keys).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Objects defined on incompatible grids or with mismatched sizes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Loss of numerical integrity (non-finite amplitudes, indefinite matrices).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tweezer
