#pragma once

#include <stdexcept>
#include <string>

namespace styler {

/// Base of every error thrown by the library. `exit_code()` is the process
/// status the CLI reports for it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Bad arguments: wrong shapes, indivisible dimensions, out-of-domain values.
class InvalidInput : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// A documented precondition was violated by the caller (e.g. a
/// non-symmetric matrix handed to the symmetric eigensolver).
class ContractViolation : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Missing or mis-shaped tensors while loading weights.
class LoadError : public IoError {
public:
    using IoError::IoError;
};

/// Non-finite values where finite ones are required (NaN loss, inf input).
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

}  // namespace styler
