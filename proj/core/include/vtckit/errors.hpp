#pragma once

#include <stdexcept>
#include <string>

namespace vtckit {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data violates a documented invariant (bad manifest row, NaN feature, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file is missing a required column or carries an unexpected one.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Arguments to an operation violate its precondition (shape, range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration (too few speakers, bad fractions, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File content is not in a supported format (unknown codec, bad magic, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure; message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A channel has zero zero-lag autocorrelation; carries the offending pair.
class DegenerateChannelError : public Error {
 public:
  DegenerateChannelError(int i, int j)
      : Error("degenerate channel in correlation pair (" + std::to_string(i) +
              ", " + std::to_string(j) + "): zero-lag autocorrelation is zero"),
        channel_i(i),
        channel_j(j) {}
  int channel_i;
  int channel_j;
};

}  // namespace vtckit
