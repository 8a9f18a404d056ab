#pragma once

#include <stdexcept>
#include <string>

namespace f0t {

// Malformed input, contract violation, unusable configuration.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime (divergence, non-finite values).
// The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace f0t
