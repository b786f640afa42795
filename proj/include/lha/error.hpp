#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lha {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record or file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Binary file with a bad magic/version or truncated payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Argument or dimension mismatch at an API boundary.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace lha
