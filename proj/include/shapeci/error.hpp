#pragma once

#include <stdexcept>
#include <string>

namespace shapeci {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The target point sits on (or beyond) the boundary of [-1/2, 1/2], where any
/// honest interval must be unbounded.
class BoundaryError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed external input (CSV, JSON config).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap before meeting tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapeci
