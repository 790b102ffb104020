#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvqa {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A symbol, id, task or parameter name is unknown.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: unknown key, bad value, inconsistent widths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The requested operation is not available for this model variant.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `line` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mvqa
