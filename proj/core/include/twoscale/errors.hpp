#pragma once

#include <stdexcept>
#include <string>

namespace twoscale {

/// Invalid user-facing configuration (bad sizes, unknown identifiers, violated bounds).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Field or array dimensions do not match the grids they are used with.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A Robin coefficient left the admissible box [k_min, k_max].
class AdmissibilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class LinearSolverError : public std::runtime_error {
public:
    LinearSolverError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Picard iteration (macro nonlinearity or micro-macro coupling) did not settle.
class FixedPointError : public std::runtime_error {
public:
    FixedPointError(const std::string& what, double last_update, int iterations)
        : std::runtime_error(what), last_update_(last_update), iterations_(iterations) {}

    double last_update() const noexcept { return last_update_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_update_;
    int iterations_;
};

class CouplingError : public FixedPointError {
public:
    using FixedPointError::FixedPointError;
};

/// Armijo backtracking exhausted its halvings inside the Gauss-Newton loop.
class StagnationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace twoscale
