#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geoforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::size_t line = 0, std::string field = {})
      : Error((line ? "line " + std::to_string(line) + ": " : std::string()) +
              (field.empty() ? "" : "field '" + field + "': ") + what),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace geoforge
