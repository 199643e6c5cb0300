#pragma once

#include <stdexcept>
#include <string>

namespace snmlab {

// Invalid configuration or precondition violation (CLI maps these to exit 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched array dimensions.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training blew up (non-finite weights or runaway loss); names the epoch.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, int epoch_index)
        : std::runtime_error(msg), epoch(epoch_index) {}
    int epoch;
};

// Projection basis too ill-conditioned to solve.
struct DegenerateBasisError : std::runtime_error {
    explicit DegenerateBasisError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace snmlab
