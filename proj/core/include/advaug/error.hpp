#pragma once

#include <stdexcept>
#include <string>

namespace advaug {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown named option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (labels, tags, IDX payloads).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A serialized file does not follow its format (bad magic, truncation).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An API was called in a way its contract forbids.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace advaug
