#pragma once

#include <stdexcept>
#include <string>

namespace ccsgp {

// Bad shapes, non-finite data, out-of-domain parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A covariance matrix could not be factorized even after the full jitter
// schedule. `minor_index` is the 0-based index of the first non-positive
// leading minor encountered at the largest jitter.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long minor_index = -1)
      : std::runtime_error(what), minor_index_(minor_index) {}
  long minor_index() const noexcept { return minor_index_; }

 private:
  long minor_index_;
};

// Every start of a hyperparameter search failed.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite state while rolling out a system.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccsgp
