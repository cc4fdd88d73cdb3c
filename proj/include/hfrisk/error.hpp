#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hfrisk {

/// Input that breaks a domain contract (range, uniqueness, precondition).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input, located by file, line and column (1-based).
class ParseError : public ValidationError {
 public:
  ParseError(std::string file, std::size_t line, std::size_t column, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                        what),
        file_(std::move(file)),
        line_(line),
        column_(column) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hfrisk
