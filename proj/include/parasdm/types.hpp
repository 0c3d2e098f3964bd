#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace parasdm {

using Index = std::size_t;

/// Base class of all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Length or block-layout mismatch between a flat vector and a parameter layout.
class LayoutError : public Error {
 public:
  using Error::Error;
};

/// Malformed model or configuration input.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A cost evaluation produced a non-finite number.
class NumericError : public Error {
 public:
  NumericError(Index s, Index a, Index next, double value)
      : Error(describe(s, a, next, value)), state(s), action(a), next_state(next) {}

  Index state;
  Index action;
  Index next_state;

 private:
  static std::string describe(Index s, Index a, Index next, double value) {
    std::ostringstream os;
    os << "non-finite transition cost " << value << " at (s=" << s << ", a=" << a
       << ", s'=" << next << ")";
    return os.str();
  }
};

/// An iterative solve did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", residual=" + std::to_string(residual) + ")"),
        iterations(iterations),
        residual(residual) {}

  std::size_t iterations;
  double residual;
};

/// (I - gamma P_mu) is singular or numerically so; the policy is not proper.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

}  // namespace parasdm
