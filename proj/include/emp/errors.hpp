#pragma once

#include <stdexcept>
#include <string>

namespace emp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain where an operation is defined
/// (e.g. a derivative requested on the boundary of dom W).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid family or problem parameters detected at construction time.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// The family lacks the structure an operation needs (no monotone sigma tail).
class UnsupportedFamilyError : public Error {
 public:
  using Error::Error;
};

/// A series was asked for at a point where it is certified divergent.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// An iteration or term budget was exhausted before the tolerance was met.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Target value outside the open range of a monotone map.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// The constraint set is empty.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An operation was called with its stated precondition violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Problem-spec text could not be parsed; carries a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace emp
