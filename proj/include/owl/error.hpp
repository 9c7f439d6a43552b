#pragma once

#include <stdexcept>
#include <string>

namespace owl {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or buffer shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An argument outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// An object used in the wrong lifecycle state.
class StateError : public Error {
 public:
  using Error::Error;
};

// Optimisation diverged (non-finite loss or gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Malformed input document; the message carries the location.
class ParseError : public Error {
 public:
  ParseError(const std::string& location, const std::string& what)
      : Error(location + ": " + what), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Binary artifact with a bad magic, version or truncated payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Inconsistent run configuration detected before any work is done.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace owl
