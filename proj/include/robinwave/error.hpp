#pragma once

#include <stdexcept>
#include <string>

namespace robinwave {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Iterative method failed (non-convergence, NaN, underflow).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Root bracket does not satisfy lo < hi and a sign change.
class BracketError : public Error {
public:
    using Error::Error;
};

/// A computed object violates a structural invariant it must satisfy.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Input data insufficient or malformed for a statistical fit.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace robinwave
