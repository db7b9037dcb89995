#pragma once

#include <stdexcept>
#include <string>

namespace bidyn {

// Bad argument values or shapes supplied by the caller.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition on object or data state does not hold
// (empty buffers, too little training data, ...).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The object is not in a usable state yet (e.g. an ensemble queried before
// it was ever trained).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite losses, gradients or parameters.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bidyn
