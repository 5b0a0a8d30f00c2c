#pragma once

#include <stdexcept>
#include <string>

namespace revctl {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A value violates a documented precondition or invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// The requested Hilbert-space sector exceeds the configured dimension cap.
class DimensionLimitError : public Error {
public:
    explicit DimensionLimitError(const std::string& msg) : Error(msg) {}
};

/// Too few usable data points for a fit.
class FitError : public Error {
public:
    explicit FitError(const std::string& msg) : Error(msg) {}
};

}  // namespace revctl
