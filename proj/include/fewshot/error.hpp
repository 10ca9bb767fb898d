#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fewshot {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or vector sizes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data invariant.
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Not enough classes or samples to satisfy a request.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class InfeasibleSplitError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& what, long long episode = -1)
      : Error(episode >= 0 ? what + " (episode " + std::to_string(episode) + ")" : what),
        episode_(episode) {}
  long long episode() const noexcept { return episode_; }

 private:
  long long episode_;
};

/// Checkpoint or configuration does not match what the caller expects.
class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace fewshot
