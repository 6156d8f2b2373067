#pragma once

#include <stdexcept>
#include <string>

namespace flatdd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A trajectory file parsed but violates the (u, y, n) length invariant.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file could not be parsed at all.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state or residual during iteration.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Normal equations not solvable without regularization.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Non-finite basis function value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent problem or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace flatdd
