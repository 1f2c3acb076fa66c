#pragma once

#include <stdexcept>
#include <string>

namespace bivlm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file: bad magic, unsupported version, inconsistent header.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File or stream ended before the declared payload.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Input values violate a numeric invariant (NaN, Inf, shape mismatch).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

/// Attention tensor violates a normalisation contract.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace bivlm
