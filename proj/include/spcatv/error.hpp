#pragma once

#include <stdexcept>
#include <string>

namespace spcatv {

// Malformed or inconsistent input data (files, shapes, structure).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver hit an iteration cap or produced non-finite values.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spcatv
