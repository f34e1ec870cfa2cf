#include "twoscale/sensitivity.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/norms.hpp"
#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

using Factorization = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;

void check_base(const Problem& problem, const Trajectory& base) {
    base.require_complete();
    const Geometry& g = problem.geometry;
    if (base.steps() != problem.params.step_count() || base.macro_nodes != g.macro.size() ||
        base.micro_points != g.micro.size()) {
        throw ShapeError("base trajectory does not match the problem grids or step count");
    }
}

std::unique_ptr<Factorization> factorize(const MicroOperator& op) {
    auto f = std::make_unique<Factorization>();
    f->compute(Eigen::SparseMatrix<double>(op.system()));
    if (f->info() != Eigen::Success) throw LinearSolverError("micro step matrix factorization failed", 0.0, 0);
    return f;
}

}  // namespace

struct SensitivitySolver::Impl {
    Problem problem;
    Trajectory base;
    MicroOperator op;
    std::unique_ptr<Factorization> factor;
    std::vector<int> robin;
    std::vector<double> sigma;
    std::vector<int> neumann;
    /// S z = dt B_k 1
    Vector z;
    double avg_z = 0.0;
    /// Linearization of f at steps 1..N: entry n - 1, one value per macro node.
    std::vector<Vector> d_pressure;
    std::vector<Vector> d_average;

    Impl(const Problem& pr, const Trajectory& tr)
        : problem(pr),
          base(tr),
          op(assemble_micro_operator(pr.geometry.micro, pr.k, pr.params, pr.options.linear)),
          factor(factorize(op)) {
        const Geometry& g = problem.geometry;
        const auto r = g.micro.nodes(BoundaryPart::gamma_r);
        const auto s = g.micro.weights(BoundaryPart::gamma_r);
        const auto nn = g.micro.nodes(BoundaryPart::gamma_n);
        robin.assign(r.begin(), r.end());
        sigma.assign(s.begin(), s.end());
        neumann.assign(nn.begin(), nn.end());
        z = factor->solve(op.time_step() * op.robin_load());
        avg_z = micro_average(z, g.micro);
        const int steps = base.steps();
        for (int n = 1; n <= steps; ++n) {
            Vector a(g.macro.size()), b(g.macro.size());
            for (int x = 0; x < g.macro.size(); ++x) {
                const auto part = source_partials(base.pressure[n][x],
                                                  micro_average(base.density[n].micro(x), g.micro),
                                                  problem.params, problem.mode);
                a[x] = part.d_pressure;
                b[x] = part.d_average;
            }
            d_pressure.push_back(std::move(a));
            d_average.push_back(std::move(b));
        }
    }

    template <class Sink>
    void run(const Vector& d, Sink&& sink) const {
        const Geometry& g = problem.geometry;
        const ModelParams& p = problem.params;
        if (d.size() != static_cast<Eigen::Index>(robin.size())) {
            throw ShapeError("direction has " + std::to_string(d.size()) + " values, Gamma_R has " +
                             std::to_string(robin.size()) + " nodes");
        }
        const int nx = g.macro.size();
        const double dt = op.time_step();
        const double coeff = p.macro_coefficient();
        TwoScaleField v = TwoScaleField::zeros(g);
        MacroField u = MacroField::Zero(nx);
        Vector shift(nx), source(nx), rhs;
        for (int n = 1; n <= base.steps(); ++n) {
            const TwoScaleField& rho = base.density[n];
            for (int x = 0; x < nx; ++x) {
                rhs = op.lumped_mass().cwiseProduct(v.micro(x));
                const double drive = base.pressure[n][x] + p.ambient_pressure;
                for (std::size_t j = 0; j < robin.size(); ++j) {
                    const double q = drive - p.gas_constant * rho.micro(x)[robin[j]];
                    rhs[robin[j]] += dt * sigma[j] * d[static_cast<Eigen::Index>(j)] * q;
                }
                v.micro(x) = factor->solve(rhs);
                const double a = d_pressure[n - 1][x];
                const double b = d_average[n - 1][x];
                shift[x] = a + b * avg_z;
                source[x] = b * micro_average(v.micro(x), g.micro);
            }
            u = solve_shifted_poisson(source, shift, coeff, g.macro);
            for (int x = 0; x < nx; ++x) v.micro(x) += u[x] * z;
            sink(n, u, v);
        }
    }
};

SensitivitySolver::SensitivitySolver(const Problem& problem, const Trajectory& base) {
    check_base(problem, base);
    impl_ = std::make_unique<Impl>(problem, base);
}

SensitivitySolver::~SensitivitySolver() = default;
SensitivitySolver::SensitivitySolver(SensitivitySolver&&) noexcept = default;
SensitivitySolver& SensitivitySolver::operator=(SensitivitySolver&&) noexcept = default;

int SensitivitySolver::robin_nodes() const noexcept { return static_cast<int>(impl_->robin.size()); }

SensitivityTrajectory SensitivitySolver::solve(const Vector& direction) const {
    const Geometry& g = impl_->problem.geometry;
    SensitivityTrajectory out;
    out.pressure.push_back(MacroField::Zero(g.macro.size()));
    out.density.push_back(TwoScaleField::zeros(g));
    out.traces.push_back(extract_trace(out.density.back(), BoundaryPart::gamma_n, g.micro));
    impl_->run(direction, [&](int, const MacroField& u, const TwoScaleField& v) {
        out.pressure.push_back(u);
        out.density.push_back(v);
        out.traces.push_back(extract_trace(v, BoundaryPart::gamma_n, g.micro));
    });
    return out;
}

Vector SensitivitySolver::trace_response(const Vector& direction) const {
    const Geometry& g = impl_->problem.geometry;
    const int nx = g.macro.size();
    const int nn = static_cast<int>(impl_->neumann.size());
    Vector out(static_cast<Eigen::Index>(impl_->base.steps()) * nx * nn);
    impl_->run(direction, [&](int n, const MacroField&, const TwoScaleField& v) {
        for (int x = 0; x < nx; ++x) {
            for (int i = 0; i < nn; ++i) {
                out[(static_cast<Eigen::Index>(n - 1) * nx + x) * nn + i] = v.micro(x)[impl_->neumann[i]];
            }
        }
    });
    return out;
}

Matrix SensitivitySolver::trace_jacobian(int workers) const {
    const int cols = robin_nodes();
    const Geometry& g = impl_->problem.geometry;
    Matrix jac(static_cast<Eigen::Index>(impl_->base.steps()) * g.macro.size() *
                   static_cast<Eigen::Index>(impl_->neumann.size()),
               cols);
    parallel_for(cols, workers, [&](int j) {
        jac.col(j) = trace_response(Vector::Unit(cols, j));
    });
    return jac;
}

SensitivityTrajectory solve_sensitivity(const Problem& problem, const Trajectory& base,
                                        const Vector& direction) {
    return SensitivitySolver(problem, base).solve(direction);
}

Vector trace_weights(const Geometry& g, double time_step, int steps) {
    const auto wx = g.macro.weights();
    const auto sigma = g.micro.weights(BoundaryPart::gamma_n);
    const int nx = g.macro.size();
    const int nn = static_cast<int>(sigma.size());
    Vector w(static_cast<Eigen::Index>(steps) * nx * nn);
    for (int n = 0; n < steps; ++n) {
        for (int x = 0; x < nx; ++x) {
            for (int i = 0; i < nn; ++i) {
                w[(static_cast<Eigen::Index>(n) * nx + x) * nn + i] = time_step * wx[x] * sigma[i];
            }
        }
    }
    return w;
}

double weighted_min_singular_value(const Matrix& jacobian, const Vector& weights, const Geometry& g) {
    const auto sigma = g.micro.weights(BoundaryPart::gamma_r);
    if (jacobian.rows() != weights.size() || jacobian.cols() != static_cast<Eigen::Index>(sigma.size())) {
        throw ShapeError("Jacobian does not match weights or Gamma_R");
    }
    Vector col_scale(jacobian.cols());
    for (Eigen::Index j = 0; j < col_scale.size(); ++j) col_scale[j] = 1.0 / std::sqrt(sigma[j]);
    const Matrix scaled = weights.cwiseSqrt().asDiagonal() * jacobian * col_scale.asDiagonal();
    return Eigen::JacobiSVD<Matrix>(scaled).singularValues().minCoeff();
}

namespace {

/// Unscaled flux samples for source direction g, rows (step, macro node, Gamma_R node).
Vector neumann_response(const Problem& problem, const Trajectory& base, const MicroOperator& op,
                        const Factorization& factor, const Vector& g) {
    const Geometry& geo = problem.geometry;
    const ModelParams& p = problem.params;
    const auto robin = geo.micro.nodes(BoundaryPart::gamma_r);
    const auto sigma = geo.micro.weights(BoundaryPart::gamma_r);
    const int nx = geo.macro.size();
    const int nr = static_cast<int>(robin.size());
    if (g.size() != nr) throw ShapeError("Neumann map direction does not match Gamma_R");
    const double dt = op.time_step();

    Vector out(static_cast<Eigen::Index>(base.steps()) * nx * nr);
    TwoScaleField omega = TwoScaleField::zeros(geo);
    Vector rhs;
    for (int n = 1; n <= base.steps(); ++n) {
        const TwoScaleField& rho = base.density[n];
        for (int x = 0; x < nx; ++x) {
            rhs = op.lumped_mass().cwiseProduct(omega.micro(x));
            for (int j = 0; j < nr; ++j) rhs[robin[j]] -= dt * sigma[j] * g[j] * rho.micro(x)[robin[j]];
            omega.micro(x) = factor.solve(rhs);
            for (int i = 0; i < nr; ++i) {
                out[(static_cast<Eigen::Index>(n - 1) * nx + x) * nr + i] =
                    -problem.k[i] * p.gas_constant * omega.micro(x)[robin[i]] - g[i] * rho.micro(x)[robin[i]];
            }
        }
    }
    return out;
}

}  // namespace

Vector apply_neumann_map(const Problem& problem, const Trajectory& base, const Vector& g) {
    check_base(problem, base);
    const MicroOperator op = assemble_micro_operator(problem.geometry.micro, problem.k, problem.params,
                                                     problem.options.linear);
    return neumann_response(problem, base, op, *factorize(op), g);
}

NeumannMap assemble_neumann_map(const Problem& problem, const Trajectory& base, int workers) {
    check_base(problem, base);
    const Geometry& geo = problem.geometry;
    const MicroOperator op =
        assemble_micro_operator(geo.micro, problem.k, problem.params, problem.options.linear);
    const auto factor = factorize(op);
    const auto robin = geo.micro.nodes(BoundaryPart::gamma_r);
    const auto sigma = geo.micro.weights(BoundaryPart::gamma_r);
    const auto wx = geo.macro.weights();
    const int nx = geo.macro.size();
    const int nr = static_cast<int>(robin.size());
    const double dt = problem.params.time_step;

    NeumannMap map;
    map.matrix.resize(static_cast<Eigen::Index>(base.steps()) * nx * nr, nr);
    parallel_for(nr, workers, [&](int j) {
        map.matrix.col(j) = neumann_response(problem, base, op, *factor, Vector::Unit(nr, j)) /
                            std::sqrt(sigma[j]);
    });
    for (int n = 0; n < base.steps(); ++n) {
        for (int x = 0; x < nx; ++x) {
            for (int i = 0; i < nr; ++i) {
                map.matrix.row((static_cast<Eigen::Index>(n) * nx + x) * nr + i) *=
                    std::sqrt(dt * wx[x] * sigma[i]);
            }
        }
    }
    map.singular_values = Eigen::JacobiSVD<Matrix>(map.matrix).singularValues();

    map.min_boundary_density = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= base.steps(); ++n) {
        for (int x = 0; x < nx; ++x) {
            for (int i = 0; i < nr; ++i) {
                map.min_boundary_density = std::min(map.min_boundary_density, base.density[n].micro(x)[robin[i]]);
            }
        }
    }
    if (!map.hypothesis_ok()) {
        std::ostringstream os;
        os << "boundary density " << map.min_boundary_density << " below c0 = " << map.c0_threshold;
        map.warning = os.str();
    }
    return map;
}

FrechetReport frechet_check(const Problem& problem, const Vector& direction,
                            const std::vector<double>& epsilons) {
    for (const double eps : epsilons) {
        const RobinCoefficient shifted(problem.k.values() + eps * direction);
        if (!shifted.admissible(problem.params.k_min, problem.params.k_max)) {
            std::ostringstream os;
            os << "k + eps d leaves [k_min, k_max] for eps = " << eps;
            throw AdmissibilityError(os.str());
        }
    }
    const Trajectory base = run_simulation(problem);
    base.require_complete();
    const SensitivityTrajectory v = solve_sensitivity(problem, base, direction);
    const Geometry& g = problem.geometry;
    const double dt = problem.params.time_step;

    FrechetReport report;
    double order_sum = 0.0;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        const double eps = epsilons[i];
        Problem shifted = problem;
        shifted.k = RobinCoefficient(problem.k.values() + eps * direction);
        const Trajectory traj = run_simulation(shifted);
        traj.require_complete();
        double sum = 0.0;
        for (int n = 1; n <= base.steps(); ++n) {
            sum += dt * twoscale_h1_squared(traj.density[n] - base.density[n] - eps * v.density[n], g);
        }
        FrechetRow row{eps, std::sqrt(sum) / eps, 0.0};
        if (i > 0) {
            const FrechetRow& prev = report.rows.back();
            row.ratio = prev.remainder > 0.0 ? row.remainder / prev.remainder : 0.0;
            report.max_ratio = std::max(report.max_ratio, row.ratio);
            order_sum += std::log(prev.remainder / row.remainder) / std::log(prev.epsilon / eps);
        }
        report.rows.push_back(row);
    }
    if (epsilons.size() > 1) report.observed_order = order_sum / static_cast<double>(epsilons.size() - 1);
    return report;
}

}  // namespace twoscale
