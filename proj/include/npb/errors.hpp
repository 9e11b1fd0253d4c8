#pragma once

#include <stdexcept>
#include <string>

namespace npb {

// Bad or unusable input data (malformed rows, empty tables, mismatched
// files). The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite objective, rank deficiency, quadrature
// breakdown). The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace npb
