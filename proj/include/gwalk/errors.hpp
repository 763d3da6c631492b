#pragma once

#include <stdexcept>
#include <string>

namespace gwalk {

/// Malformed configuration, out-of-range parameter or violated precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Composition of two arrows whose endpoints do not match.
class CompositionUndefined : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Non-convergence, singular systems and degenerate pivots.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A dynamic program exceeded its reachable-state cap.
class StateSpaceExceeded : public NumericalFailure {
 public:
  StateSpaceExceeded(const std::string& what, std::size_t cap)
      : NumericalFailure(what), cap_(cap) {}
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

}  // namespace gwalk
