#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfisurface {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TypeParseError : public Error {
 public:
  TypeParseError(const std::string& message, std::size_t offset)
      : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Malformed JSON text. Line and column are 1-based.
class FactsSyntaxError : public Error {
 public:
  FactsSyntaxError(const std::string& message, std::size_t line, std::size_t column)
      : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed JSON that does not follow the facts schema.
class FactsSchemaError : public Error {
 public:
  FactsSchemaError(const std::string& path, const std::string& message)
      : Error("schema error at " + path + ": " + message) {}
};

class VersionMismatchError : public Error {
 public:
  using Error::Error;
};

class InfeasibleConfigError : public Error {
 public:
  using Error::Error;
};

class PolicyNotApplicableError : public Error {
 public:
  using Error::Error;
};

class MissingNameHintError : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ZeroBaselineError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfisurface
