#pragma once

#include <stdexcept>
#include <string>

namespace fusionpose {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes; everything else propagates as a plain exception.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of operands are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An argument violates an operation's precondition (empty cloud, bad box...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A configuration value is missing or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A contract between components was broken (non-scalar loss, skeleton mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A crop selected zero points; the caller skips the instance for that frame.
class EmptyCropError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Training produced a non-finite loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fusionpose
