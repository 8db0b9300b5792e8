#pragma once

#include <stdexcept>
#include <string>

namespace echokit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Filesystem failure: missing input, unwritable output.
class IoError : public Error {
public:
    using Error::Error;
};

/// File is readable but uses an encoding we do not handle (color, 16-bit, ...).
class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

/// File claims a supported format but its header or body is damaged.
class CorruptFile : public Error {
public:
    using Error::Error;
};

/// Numerical failure during an iterative computation (e.g. NaN loss).
class NumericalError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw InvalidArgument(message);
    }
}

}  // namespace detail
}  // namespace echokit
