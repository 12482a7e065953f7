#pragma once

#include <stdexcept>
#include <string>

namespace fpsim {

// Numerical failure (non-convergence, singular solve, budget exceeded).
// Carries an estimate of how bad things were when we gave up.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double estimate)
        : std::runtime_error(what), estimate_(estimate) {}
    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

// Contract violation on user-facing input (bad dimensions, bad units, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Configuration file problem; message carries the field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fpsim
