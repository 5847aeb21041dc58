#pragma once

#include <stdexcept>
#include <string>

namespace cvchess {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition (bad shapes, out-of-range indices, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NoBoardFound : public Error {
 public:
  NoBoardFound() : Error("no board quadrilateral found") {}
  using Error::Error;
};

class DegenerateQuad : public Error {
 public:
  using Error::Error;
};

/// Text parse failure. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"
                       : what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class IllegalMove : public Error {
 public:
  using Error::Error;
};

class AmbiguousMove : public Error {
 public:
  using Error::Error;
};

}  // namespace cvchess
