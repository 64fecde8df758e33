#pragma once

#include <stdexcept>
#include <string>

namespace hrvtx {

// Base for everything thrown by this library. CLI maps subclasses to exit
// codes: ConfigError -> 1, ParseError/DataError -> 2, ConditioningError -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: out-of-range knobs, unusable option combinations.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed input bytes or text (headers, annotation files, CSV, JSON).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

// Well-formed input that violates a semantic requirement (non-increasing
// beat times, missing columns, not enough data for an estimator).
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
};

// Numerically unusable state: non-positive-definite covariance, eigenvalue
// floor reached where exactness is required.
class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& msg) : Error(msg) {}
};

}  // namespace hrvtx
