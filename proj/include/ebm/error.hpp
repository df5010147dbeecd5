#pragma once

#include <stdexcept>
#include <string>

namespace ebm {

// Bad input: malformed files, schema violations, invalid configuration.
// The CLI maps these to exit status 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A numerically diverging fit (overflowing scores, non-finite deviance).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ebm
