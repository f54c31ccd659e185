#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace geomnet {

// Tensor shapes do not satisfy an operation's contract.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A value lies outside an operation's domain (bad label, log of a
// non-positive number, empty random range, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid run configuration (sizes, hyperparameters, flags).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or truncated on-disk data. Carries the byte offset at which
// parsing failed.
struct FormatError : std::runtime_error {
    FormatError(const std::string& msg, std::uint64_t at)
        : std::runtime_error(msg + " (at byte " + std::to_string(at) + ")"), offset(at) {}
    std::uint64_t offset;
};

// Procedural generation could not satisfy its constraints within the
// retry budget.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API misuse: mismatched tape, wrong model for the data, and similar
// caller-side contract violations.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace geomnet
