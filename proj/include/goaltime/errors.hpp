#pragma once

#include <stdexcept>
#include <string>

namespace goaltime {

/// Input files or command-line values that fail to parse.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or type invariant.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Optimizer failure that leaves no usable result (divergence, singular system).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace goaltime
