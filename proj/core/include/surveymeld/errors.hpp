#pragma once

#include <stdexcept>
#include <string>

namespace meld {

// Base class for all errors raised by the library. The CLI maps the
// subclasses onto distinct process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent run configuration (iteration counts, priors, paths).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that fails validation (schema, ranges, consistency).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure inside a sampler or factorization.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Cholesky pivot failure; carries the offending pivot index.
class NotPositiveDefiniteError : public NumericError {
 public:
  NotPositiveDefiniteError(const std::string& what, std::size_t pivot)
      : NumericError(what), pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace meld
