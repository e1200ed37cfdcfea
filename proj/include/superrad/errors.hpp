#pragma once

#include <stdexcept>
#include <string>

namespace superrad {

// Base class for every error raised by the toolkit. The CLI maps the
// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Cloud sampling could not place an atom outside the exclusion radius.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// A pair of atoms is closer than the allowed minimum separation, so the
// 1/xi^3 elastic coupling would overflow.
class CouplingOverflow : public Error {
 public:
  using Error::Error;
};

// The truncated Liouville basis does not fit in the configured memory cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Adaptive step size fell below the minimum allowed step.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

// Quadrature or eigensolver failed to reach the requested accuracy.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace superrad
