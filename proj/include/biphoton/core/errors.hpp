#pragma once

#include <stdexcept>
#include <string>

namespace biphoton::core {

/// Bad configuration or bad arguments. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File format or filesystem failure. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (fit non-convergence and friends). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace biphoton::core
