#pragma once

#include <stdexcept>
#include <string>

namespace spcl {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes incompatible with an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unknown option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or inconsistent dataset / checkpoint files.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN / Inf produced where a finite value was required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace spcl
