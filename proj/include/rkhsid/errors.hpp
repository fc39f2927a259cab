#pragma once

#include <stdexcept>
#include <string>

namespace rkhsid {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A requested time window needs samples a signal does not have.
struct BoundaryError : Error {
    using Error::Error;
};

// Input-location kind or vector dimension incompatible with a kernel.
struct DimensionError : Error {
    using Error::Error;
};

// A matrix that must be full rank is singular.
struct RankError : Error {
    RankError(const std::string& what, int deficient_dim)
        : Error(what), deficient_dimension(deficient_dim) {}
    int deficient_dimension;
};

// Factorization failed even after jitter escalation.
struct ConditioningError : Error {
    ConditioningError(const std::string& what, double cond)
        : Error(what), condition_estimate(cond) {}
    double condition_estimate;
};

// fit_metric on a constant test vector.
struct UndefinedFitError : Error {
    using Error::Error;
};

// A matrix expected symmetric is not.
struct StructuralError : Error {
    using Error::Error;
};

// Nonlinear kernel passed where a linear one is required.
struct UnsupportedExtractionError : Error {
    using Error::Error;
};

// No tuning start produced a finite objective.
struct TuningError : Error {
    using Error::Error;
};

// Bad configuration file or CLI arguments.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace rkhsid
