#pragma once

#include <stdexcept>
#include <string>

namespace gcpress {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model/network/layer configuration (bad shapes, malformed spec strings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an operation's contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A serialized stream is truncated or internally inconsistent.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Wrong magic bytes or otherwise not one of our files.
class FormatError : public CorruptionError {
 public:
  using CorruptionError::CorruptionError;
};

class UnsupportedVersionError : public CorruptionError {
 public:
  using CorruptionError::CorruptionError;
};

class UnsupportedSizeError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// NaN/Inf produced by an op or a loss term.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcpress
