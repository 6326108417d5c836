#pragma once

#include <stdexcept>
#include <string>

namespace nidslabel {

// Base for every error the library raises. The CLI maps ValidationError
// subclasses to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed input text. Line is 1-based; 0 when unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LookupError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// Transport failure that survived all retries while labeling one rule.
class LabelingError : public Error {
 public:
  LabelingError(const std::string& what, long long sid)
      : Error("sid " + std::to_string(sid) + ": " + what), sid_(sid) {}
  long long sid() const noexcept { return sid_; }

 private:
  long long sid_;
};

}  // namespace nidslabel
