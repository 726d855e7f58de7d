#pragma once

#include <stdexcept>
#include <string>

namespace smbo {

/// Malformed or infeasible input: bad documents, out-of-bounds points,
/// non-finite observations, domain violations.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or solve that could not be stabilised.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation not allowed in the current study state (e.g. suggest after stop).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace smbo
