#pragma once

#include <stdexcept>
#include <string>

namespace mmmd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user data (dimension mismatch, too few rows).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (unknown preset, bad weights, bad level).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File parsing or writing failure; messages carry line/column locations.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure such as a covariance that is not positive definite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmmd
