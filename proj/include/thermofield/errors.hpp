#pragma once

#include <stdexcept>
#include <string>

namespace thermofield {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed file syntax: bad CSV header, unparseable JSON, unknown keys.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Dimension or length mismatch between related objects.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Invalid value content (non-finite entries, out-of-range data).
class DataError : public Error {
public:
  using Error::Error;
};

/// Operation not valid for the object's current state.
class StateError : public Error {
public:
  using Error::Error;
};

/// Invalid argument value.
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Numerical failure: under-determined solve, zero-norm division.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Filesystem failure: unreadable input, unwritable output.
class IoError : public Error {
public:
  using Error::Error;
};

} // namespace thermofield
