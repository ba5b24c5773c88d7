#pragma once

#include <stdexcept>
#include <string>

namespace ecladts {

// Base class of every error raised by the library. The CLI maps the
// subclasses onto process exit codes (usage 1, input 2, numerical 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes or mismatched dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument values outside their admissible domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// API or command misuse (wrong call sequence, missing flags).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed or inconsistent input artifacts.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (divergence, NaN gradients).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ecladts
