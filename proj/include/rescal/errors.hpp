#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rescal {

/// Input data that is well formed but violates a structural requirement
/// (cycles, self-loops, mismatched dimensions).
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a numeric procedure cannot produce its result
/// (diverged training, exhausted witness search, degenerate formula).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rescal
