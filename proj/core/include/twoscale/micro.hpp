#pragma once

#include <Eigen/SparseCore>

#include "twoscale/fields.hpp"
#include "twoscale/grid.hpp"
#include "twoscale/model.hpp"

namespace twoscale {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearSolverOptions {
    double tolerance = 1e-12;
    /// 0 selects 10 * n_y^2.
    int max_iterations = 0;
};

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned conjugate gradient on an SPD matrix.  `x` holds the
/// initial guess on entry.  Stops once ||b - A x|| <= tol ||b||.
CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b, Vector& x, double tol,
                            int max_iterations);

enum class Admissibility { enforce, skip };

/// One implicit Euler step of the cell problem in the lumped-mass form
///
///   (M + dt D K + dt R B_k) rho' = M rho + dt B_k 1 (pi + p_F)
///
/// with M the trapezoid cell areas, K the finite-volume Neumann stiffness and
/// B_k = diag(sigma_j k_j) on Gamma_R.  Dividing by M gives the ghost-node
/// form I + dt D L + dt R B of the same step.
class MicroOperator {
public:
    /// Symmetric positive definite system matrix M + dt (D K + R B_k).
    const SparseMatrix& system() const noexcept { return system_; }
    /// M^{-1} system(): identity plus the strong-form step terms.
    SparseMatrix step_matrix() const;

    const Vector& lumped_mass() const noexcept { return mass_; }
    /// sigma_j k_j scattered to Gamma_R node positions (zero elsewhere).
    const Vector& robin_load() const noexcept { return robin_load_; }
    const RobinCoefficient& coefficient() const noexcept { return k_; }
    double time_step() const noexcept { return dt_; }
    const LinearSolverOptions& options() const noexcept { return options_; }

    /// Solve system() x = rhs by CG from `guess`; throws LinearSolverError.
    Vector solve(const Vector& rhs, const Vector& guess) const;

private:
    friend MicroOperator assemble_micro_operator(const MicroGrid&, const RobinCoefficient&,
                                                 const ModelParams&, LinearSolverOptions,
                                                 Admissibility);
    SparseMatrix system_;
    Vector mass_;
    Vector robin_load_;
    RobinCoefficient k_;
    double dt_ = 0.0;
    LinearSolverOptions options_;
};

/// Unscaled Neumann stiffness: sum over links of factor (e_a - e_b)(e_a - e_b)^T.
SparseMatrix neumann_stiffness(const MicroGrid& grid);

MicroOperator assemble_micro_operator(const MicroGrid& grid, const RobinCoefficient& k,
                                      const ModelParams& params, LinearSolverOptions options = {},
                                      Admissibility check = Admissibility::enforce);

/// rho^{n+1} for Robin drive pi + p_F.
MicroField micro_step(const MicroField& rho, double pi, const MicroOperator& op,
                      const ModelParams& params);

/// Step with an explicit Robin drive q_j per Gamma_R node, i.e. boundary
/// condition -D grad rho . n = q_j - k_j R rho.
MicroField micro_step_driven(const MicroField& rho, const Vector& drive, const MicroOperator& op,
                             const MicroGrid& grid);

/// k_j (pi + p_F - R rho(y_j)) on Gamma_R, read off the Robin condition.
Vector micro_boundary_flux(const MicroField& rho, double pi, const RobinCoefficient& k,
                           const MicroGrid& grid, const ModelParams& params);

}  // namespace twoscale
