#pragma once

#include <stdexcept>
#include <string>

namespace atsp {

/// Raised when a caller violates an operation's documented precondition
/// (shape mismatch, out-of-range parameter, malformed input).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal invariant that should hold by construction fails.
class InvariantFailure : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace atsp
