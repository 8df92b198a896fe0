#pragma once

#include <stdexcept>
#include <string>

namespace covspec {

// Base class for all library errors. Subclasses map to distinct CLI exit
// codes (see tools/covspec_main.cpp and README).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input violates a documented precondition (point inside the support,
// measure atom outside the admissible set, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// A model description is structurally invalid (bad mass, unsorted spikes,
// atom at zero, dimension mismatch).
struct InvalidSpecError : Error {
    explicit InvalidSpecError(const std::string& msg) : Error(msg) {}
};

// An iterative method exhausted its budget.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double residual, long iterations)
        : Error(msg), residual(residual), iterations(iterations) {}
    double residual;
    long iterations;
};

// A kernel or resolvent is evaluated too close to one of its poles.
struct SingularityError : Error {
    explicit SingularityError(const std::string& msg) : Error(msg) {}
};

// File / JSON parse problems surfaced by the CLI layer.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace covspec
