#pragma once

#include <stdexcept>
#include <string>

namespace ndno {

// Bad inputs: invalid specs, shape mismatches, out-of-range arguments.
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite values, divergence, failed numeric contracts.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ndno
