#pragma once

#include <stdexcept>
#include <string>

namespace firefilter {

/// Bad configuration, bad arguments, or malformed input data. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical/runtime failure (CFL violation, domain too small, degenerate
/// linear algebra). CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem/serialization failure. CLI exit code 4.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace firefilter
