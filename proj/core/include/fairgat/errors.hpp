#pragma once

#include <stdexcept>
#include <string>

namespace fairgat {

/// Malformed or inconsistent input data (files, graphs, splits).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (divergence, degenerate matrices).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration or usage.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairgat
