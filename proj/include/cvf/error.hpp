#pragma once

#include <stdexcept>
#include <string>

namespace cvf {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions do not chain or match.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unusable inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A tuning parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A configuration violates a physical or structural constraint (e.g. CFL).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or version-mismatched file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared during training or integration.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cvf
