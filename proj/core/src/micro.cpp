#include "twoscale/micro.hpp"

#include <sstream>
#include <vector>

#include "twoscale/errors.hpp"

namespace twoscale {

CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b, Vector& x, double tol,
                            int max_iterations) {
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero(b.size());
        return {0, 0.0, true};
    }
    if (x.size() != b.size()) x.setZero(b.size());
    const Vector inv_diag = a.diagonal().cwiseInverse();

    CgResult result;
    Vector r = b - a * x;
    double rnorm = r.norm();
    // Restart from the true residual if the recurrence drifted below tol.
    while (rnorm > tol * bnorm && result.iterations < max_iterations) {
        Vector z = inv_diag.cwiseProduct(r);
        Vector p = z;
        double rz = r.dot(z);
        while (result.iterations < max_iterations) {
            ++result.iterations;
            const Vector ap = a * p;
            const double alpha = rz / p.dot(ap);
            x.noalias() += alpha * p;
            r.noalias() -= alpha * ap;
            if (r.norm() <= tol * bnorm) break;
            z = inv_diag.cwiseProduct(r);
            const double rz_next = r.dot(z);
            p = z + (rz_next / rz) * p;
            rz = rz_next;
        }
        r = b - a * x;
        rnorm = r.norm();
    }
    result.relative_residual = rnorm / bnorm;
    result.converged = rnorm <= tol * bnorm;
    return result;
}

SparseMatrix neumann_stiffness(const MicroGrid& grid) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(grid.links().size() * 4);
    for (const auto& link : grid.links()) {
        entries.emplace_back(link.a, link.a, link.factor);
        entries.emplace_back(link.b, link.b, link.factor);
        entries.emplace_back(link.a, link.b, -link.factor);
        entries.emplace_back(link.b, link.a, -link.factor);
    }
    SparseMatrix k(grid.size(), grid.size());
    k.setFromTriplets(entries.begin(), entries.end());
    return k;
}

MicroOperator assemble_micro_operator(const MicroGrid& grid, const RobinCoefficient& k,
                                      const ModelParams& params, LinearSolverOptions options,
                                      Admissibility check) {
    const auto robin = grid.nodes(BoundaryPart::gamma_r);
    if (k.size() != static_cast<int>(robin.size())) {
        throw ShapeError("Robin coefficient has " + std::to_string(k.size()) + " values, Gamma_R has " +
                         std::to_string(robin.size()) + " nodes");
    }
    if (check == Admissibility::enforce) k.require_admissible(params.k_min, params.k_max);
    if (!(params.time_step > 0.0)) throw ConfigError("time step must be positive");

    MicroOperator op;
    op.dt_ = params.time_step;
    op.k_ = k;
    op.options_ = options;
    if (op.options_.max_iterations <= 0) {
        op.options_.max_iterations = 10 * grid.points_per_side() * grid.points_per_side();
    }

    const auto cells = grid.cell_weights();
    op.mass_ = Eigen::Map<const Vector>(cells.data(), static_cast<Eigen::Index>(cells.size()));
    op.robin_load_ = Vector::Zero(grid.size());
    const auto sigma = grid.weights(BoundaryPart::gamma_r);
    for (std::size_t j = 0; j < robin.size(); ++j) {
        op.robin_load_[robin[j]] = sigma[j] * k[static_cast<int>(j)];
    }

    const double dt = params.time_step;
    SparseMatrix sys = (dt * params.diffusivity) * neumann_stiffness(grid);
    for (int p = 0; p < grid.size(); ++p) {
        sys.coeffRef(p, p) += op.mass_[p] + dt * params.gas_constant * op.robin_load_[p];
    }
    sys.makeCompressed();
    op.system_ = std::move(sys);
    return op;
}

SparseMatrix MicroOperator::step_matrix() const {
    return mass_.cwiseInverse().asDiagonal() * system_;
}

Vector MicroOperator::solve(const Vector& rhs, const Vector& guess) const {
    Vector x = guess;
    const CgResult r = conjugate_gradient(system_, rhs, x, options_.tolerance, options_.max_iterations);
    if (!r.converged) {
        std::ostringstream os;
        os << "micro CG did not converge in " << r.iterations
           << " iterations (relative residual " << r.relative_residual << ")";
        throw LinearSolverError(os.str(), r.relative_residual, r.iterations);
    }
    return x;
}

MicroField micro_step(const MicroField& rho, double pi, const MicroOperator& op,
                      const ModelParams& params) {
    if (rho.size() != op.lumped_mass().size()) throw ShapeError("micro field does not match operator");
    const Vector rhs = op.lumped_mass().cwiseProduct(rho) +
                       (op.time_step() * (pi + params.ambient_pressure)) * op.robin_load();
    return op.solve(rhs, rho);
}

MicroField micro_step_driven(const MicroField& rho, const Vector& drive, const MicroOperator& op,
                             const MicroGrid& grid) {
    const auto robin = grid.nodes(BoundaryPart::gamma_r);
    const auto sigma = grid.weights(BoundaryPart::gamma_r);
    if (rho.size() != grid.size() || drive.size() != static_cast<Eigen::Index>(robin.size())) {
        throw ShapeError("micro_step_driven: shapes do not match grid");
    }
    Vector rhs = op.lumped_mass().cwiseProduct(rho);
    for (std::size_t j = 0; j < robin.size(); ++j) {
        rhs[robin[j]] += op.time_step() * sigma[j] * drive[static_cast<Eigen::Index>(j)];
    }
    return op.solve(rhs, rho);
}

Vector micro_boundary_flux(const MicroField& rho, double pi, const RobinCoefficient& k,
                           const MicroGrid& grid, const ModelParams& params) {
    const auto robin = grid.nodes(BoundaryPart::gamma_r);
    if (rho.size() != grid.size() || k.size() != static_cast<int>(robin.size())) {
        throw ShapeError("micro_boundary_flux: shapes do not match grid");
    }
    Vector flux(k.size());
    for (int j = 0; j < k.size(); ++j) {
        flux[j] = k[j] * (pi + params.ambient_pressure - params.gas_constant * rho[robin[j]]);
    }
    return flux;
}

}  // namespace twoscale
