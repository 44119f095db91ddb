#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dneig {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Unbound variable or a function argument outside its domain.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Invalid user input: bad parameters, failed preconditions, schema violations.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Factorization breakdown or other numerical failure inside a solver.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace dneig
