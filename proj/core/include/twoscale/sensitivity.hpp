#pragma once

#include <memory>
#include <string>
#include <vector>

#include "twoscale/coupled.hpp"
#include "twoscale/fields.hpp"

namespace twoscale {

/// Linearized response (u, v) of a trajectory to a change of k along a
/// direction on Gamma_R.  Index n matches Trajectory time levels; level 0 is zero.
struct SensitivityTrajectory {
    std::vector<MacroField> pressure;
    std::vector<TwoScaleField> density;
    std::vector<TraceArray> traces;  ///< Gamma_N traces of v
};

/// Exact directional derivative of the discrete forward scheme with respect
/// to k.  Per step and macro node the micro part is
///
///   S v' = M v + dt B_d 1 (pi + p_F - R rho)|_{n+1} + dt B_k 1 u
///
/// with S the forward step matrix, and the macro part is the linearized
/// elliptic equation -A rho_F u'' = f_pi u + f_m <v'>.  Writing v' = v0 + u z
/// with S z = dt B_k 1 reduces every step to one tridiagonal solve.
class SensitivitySolver {
public:
    /// `base` must be a complete trajectory of `problem`.
    SensitivitySolver(const Problem& problem, const Trajectory& base);
    ~SensitivitySolver();
    SensitivitySolver(SensitivitySolver&&) noexcept;
    SensitivitySolver& operator=(SensitivitySolver&&) noexcept;

    SensitivityTrajectory solve(const Vector& direction) const;

    /// Gamma_N traces of v for steps 1..N flattened as (step, macro node,
    /// Gamma_N node); matches the measurement layout.
    Vector trace_response(const Vector& direction) const;

    /// Raw Jacobian: column j = trace_response(e_j).
    Matrix trace_jacobian(int workers = 1) const;

    int robin_nodes() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SensitivityTrajectory solve_sensitivity(const Problem& problem, const Trajectory& base,
                                        const Vector& direction);

/// Quadrature weights for flattened Gamma_N trace vectors, dt w_x sigma_i
/// per entry (rectangle rule in time over steps 1..N).
Vector trace_weights(const Geometry& g, double time_step, int steps);

/// Smallest singular value of W^{1/2} J Sigma_R^{-1/2}, the trace Jacobian
/// as a map between the weighted L2 spaces.
double weighted_min_singular_value(const Matrix& jacobian, const Vector& weights, const Geometry& g);

/// Discrete flux operator g -> -D grad omega(g) . n on Gamma_R, where omega
/// solves the micro problem with Robin coefficient k* R and source
/// -g rho(k*), starting from zero.  Rows (step, macro node, Gamma_R node) are
/// scaled by sqrt(dt w_x sigma_i) and columns by 1/sqrt(sigma_j), so singular
/// values are those of the map between the weighted L2 spaces.
struct NeumannMap {
    Matrix matrix;
    Vector singular_values;
    /// min of rho(k*) over steps 1..N, macro nodes and Gamma_R nodes.
    double min_boundary_density = 0.0;
    double c0_threshold = 1e-3;
    std::string warning;

    double sigma_min() const { return singular_values.size() ? singular_values.minCoeff() : 0.0; }
    bool hypothesis_ok() const noexcept { return min_boundary_density >= c0_threshold; }
};

NeumannMap assemble_neumann_map(const Problem& problem, const Trajectory& base, int workers = 1);

/// Response of the flux map to a single direction, unscaled, rows as above.
Vector apply_neumann_map(const Problem& problem, const Trajectory& base, const Vector& g);

struct FrechetRow {
    double epsilon = 0.0;
    double remainder = 0.0;  ///< r(eps)
    double ratio = 0.0;      ///< r(eps) / r(previous eps); 0 for the first row
};

struct FrechetReport {
    std::vector<FrechetRow> rows;
    /// log2 decrement log(r_i / r_{i+1}) / log(eps_i / eps_{i+1}), averaged.
    double observed_order = 0.0;
    double max_ratio = 0.0;
};

/// r(eps) = ||rho(k + eps d) - rho(k) - eps v||_{L2(0,T; L2(Omega; H1(Y)))} / eps.
/// Throws AdmissibilityError naming the offending eps.
FrechetReport frechet_check(const Problem& problem, const Vector& direction,
                            const std::vector<double>& epsilons);

}  // namespace twoscale
