#pragma once

#include <stdexcept>
#include <string>

namespace scoremerge {

/// Input outside a function's mathematical domain (e.g. t not in [0,1]).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Noise level outside a schedule's or expert's covered gamma range.
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inconsistent or invalid configuration (bad eta, non-overlapping ranges, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Vector/matrix dimension mismatch.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite loss or diverged optimization.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive solver gave up; carries the time it was stuck at.
struct SolverError : std::runtime_error {
    double stuck_time;
    SolverError(const std::string& what, double t)
        : std::runtime_error(what), stuck_time(t) {}
};

/// Statistical routine preconditions violated (sample too small, ...).
struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range data values.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scoremerge
