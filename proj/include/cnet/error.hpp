#pragma once

#include <stdexcept>
#include <string>

namespace cnet {

// Base of every error raised by the library. The CLI maps the concrete type
// onto its exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad invocation or configuration (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

// Missing files, malformed CSV, schema mismatches, corrupt model files (exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

// Tensor / vector dimensions that do not line up.
class ShapeError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite losses and other numeric breakdowns (exit code 3).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace cnet
