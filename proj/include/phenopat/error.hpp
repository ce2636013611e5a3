#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phenopat {

// Base class for every error the library raises on bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content. `line()` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed content that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Binary problem with only one class present.
class DegenerateLabelsError : public Error {
 public:
  DegenerateLabelsError() : Error("degenerate labels") {}
  explicit DegenerateLabelsError(const std::string& what)
      : Error("degenerate labels: " + what) {}
};

}  // namespace phenopat
