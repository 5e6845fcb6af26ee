#pragma once

#include <stdexcept>
#include <string>

namespace resmix {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not satisfy an operation's preconditions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated binary input (IDX, dataset, checkpoint).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Configuration values, presets or CLI keys that fail validation, and
// audits that do not pass.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem and network failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace resmix
