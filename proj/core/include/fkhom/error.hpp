#pragma once

#include <stdexcept>
#include <string>

namespace fkhom {

// Bad input: violated precondition, malformed config, refused request.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// The numerics went wrong (NaN, overflow, divergence).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fkhom
