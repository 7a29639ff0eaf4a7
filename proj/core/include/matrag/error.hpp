#pragma once

#include <stdexcept>
#include <string>

namespace matrag {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input; `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class AmbiguityError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what, int status = 0)
      : Error(what), status_(status) {}
  // HTTP status when the failure came from a remote reply, else 0.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class TimeoutError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ScoringError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error("config error: " + field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class RequestError : public Error {
 public:
  using Error::Error;
};

}  // namespace matrag
