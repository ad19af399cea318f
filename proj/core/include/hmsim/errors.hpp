#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hmsim {

// Address or key outside the configured domain.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Inconsistent or unsupported configuration, detected before simulation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed trace input. Carries the 1-based record number and, for text
// traces, the 1-based column of the offending token.
class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& what, std::size_t line, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A caller broke an operation's precondition (e.g. removing an entry that
// was never inserted). Signals a bug in the placement logic, not bad input.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A debug sweep found simulator state that breaks a documented invariant.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hmsim
