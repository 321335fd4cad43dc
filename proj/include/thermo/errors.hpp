#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thermo {

// Every library failure derives from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input bytes or text (NPY header, JSONL line, CSV row).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0);
  // 1-based line number for line-oriented inputs, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input using a feature outside the supported subset.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Decoded values violate a domain invariant (NaN, out-of-range temperature).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments that break an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure: missing file, unwritable directory.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace thermo
