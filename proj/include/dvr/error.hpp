#pragma once

#include <stdexcept>
#include <string>

namespace dvr {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: config, CSV, or a value outside its domain.
class InputError : public Error {
public:
  using Error::Error;
};

/// Node values are not uniquely determined by measurements plus constraints,
/// or the constraint set is rank deficient.
class EstimabilityError : public Error {
public:
  using Error::Error;
};

/// A postcondition of a numerical routine failed (e.g. balance residual).
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace dvr
