#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace symeval {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t pos)
      : Error(msg + " at position " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

struct EvalError : Error {
  using Error::Error;
};

struct DivisionByZeroError : EvalError {
  DivisionByZeroError() : EvalError("division by zero") {}
};

struct UnboundVariableError : EvalError {
  explicit UnboundVariableError(const std::string& name)
      : EvalError("unbound variable '" + name + "'"), variable(name) {}
  std::string variable;
};

// equivalent() could not find enough assignments where both sides evaluate
// (e.g. an expression that divides by zero almost everywhere).
struct IndeterminateEquivalenceError : Error {
  using Error::Error;
};

struct DatasetError : Error {
  using Error::Error;
};

struct BackendError : Error {
  using Error::Error;
};

struct FixtureMissError : BackendError {
  FixtureMissError(const std::string& fp, const std::string& prompt_prefix)
      : BackendError("fixture miss for fingerprint " + fp + " (prompt: \"" +
                     prompt_prefix + "\")"),
        fingerprint(fp) {}
  std::string fingerprint;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace symeval
