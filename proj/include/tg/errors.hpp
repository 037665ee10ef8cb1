#pragma once

#include <stdexcept>
#include <string>

namespace tg {

// Bad input: malformed files, inconsistent shapes, invalid parameters.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-convergence, breakdown, singular operators.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tg
