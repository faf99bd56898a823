#pragma once

#include <stdexcept>
#include <string>

namespace mvnav {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-supplied data violated a precondition (bad file, out-of-range
// argument, point outside the navigable region, ...). The CLI maps these to
// exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

// A numerical fault detected while training (non-finite loss or gradient).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvnav
