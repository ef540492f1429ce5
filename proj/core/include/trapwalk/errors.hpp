#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace trapwalk {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation (bad dimension, start outside box, ...).
struct DomainError : Error {
    using Error::Error;
};

// A request would exceed a configured memory cap.
struct CapacityError : Error {
    using Error::Error;
};

// Persisted data could not be read back. The kind distinguishes the failure
// so callers can tell a stale writer (Version) from a damaged file (Checksum,
// Truncated).
struct FormatError : Error {
    enum class Kind { BadMagic, Version, Checksum, Truncated, Malformed };

    FormatError(Kind k, const std::string& msg) : Error(msg), kind(k) {}

    Kind kind;
};

// Iterative solver failed to reach its tolerance; carries the best residual
// seen so the caller can decide whether the partial answer is usable.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double best_residual, std::int64_t iterations)
        : Error(msg), residual(best_residual), iterations(iterations) {}

    double residual;
    std::int64_t iterations;
};

// Conditioning on survival is impossible: no path of the requested length
// survives from the given start.
struct NoSurvivingPath : Error {
    using Error::Error;
};

// An internal exact identity failed beyond rounding tolerance. This always
// indicates a bug, never bad input.
struct ConsistencyError : Error {
    using Error::Error;
};

}  // namespace trapwalk
