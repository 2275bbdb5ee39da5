#pragma once

#include <stdexcept>
#include <string>

namespace qpsa {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied something outside an operation's domain
/// (symbol out of range, empty sequence, bad shape, malformed file).
class InputError : public Error {
 public:
  using Error::Error;
};

class UndefinedPosteriorError : public Error {
 public:
  using Error::Error;
};

/// Illegal fail/repair action on a system state.
class TransitionError : public Error {
 public:
  using Error::Error;
};

class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class GradientUndefinedError : public Error {
 public:
  using Error::Error;
};

/// The Cayley system (I + tau/2 V^H U) could not be solved.
class StepFailure : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace qpsa
