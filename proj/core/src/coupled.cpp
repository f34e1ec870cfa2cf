#include "twoscale/coupled.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/norms.hpp"
#include "twoscale/parallel.hpp"

namespace twoscale {

namespace {

void check_solver_options(const SolverOptions& o) {
    if (!(o.relaxation > 0.0 && o.relaxation <= 1.0)) throw ConfigError("relax must lie in (0, 1]");
    if (!(o.couple_tolerance > 0.0)) throw ConfigError("tol_couple must be positive");
    if (o.max_couple < 1) throw ConfigError("max_couple must be at least 1");
    if (!(o.picard.tolerance > 0.0)) throw ConfigError("tol_picard must be positive");
    if (o.picard.max_iterations < 1) throw ConfigError("max_picard must be at least 1");
    if (!(o.linear.tolerance > 0.0)) throw ConfigError("tol_lin must be positive");
}

double sup_norm(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double relative_deviation(const Matrix& expected, const Matrix& actual) {
    const double diff = sup_norm(expected - actual);
    const double scale = sup_norm(actual);
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

MacroField equilibrium_pressure(const Geometry& g, const ModelParams& p, NonlinearityMode mode) {
    const double coeff = p.macro_coefficient();
    MacroField pi = MacroField::Zero(g.macro.size());
    double previous = std::numeric_limits<double>::infinity();
    // Fixed point of pi -> solve_poisson(f(pi, (pi + p_F) / R)); stop when the
    // update reaches round-off or stops shrinking.
    for (int it = 0; it < 2000; ++it) {
        const Vector averages = (pi.array() + p.ambient_pressure) / p.gas_constant;
        MacroField next = solve_poisson(eval_f_from_averages(pi, averages, p, mode), coeff, g.macro);
        const double update = (next - pi).cwiseAbs().maxCoeff();
        pi = std::move(next);
        const double scale = std::max(pi.cwiseAbs().maxCoeff(), 1e-300);
        if (update <= 1e-15 * scale || (update >= previous && update <= 1e-12 * scale)) break;
        previous = update;
    }
    return pi;
}

TwoScaleField make_initial_density(const Problem& problem) {
    const Geometry& g = problem.geometry;
    const InitialCondition& ic = problem.initial;
    TwoScaleField rho = TwoScaleField::zeros(g);
    switch (ic.kind) {
    case InitialCondition::Kind::constant:
        rho.matrix().setConstant(ic.value);
        break;
    case InitialCondition::Kind::cosines:
        for (int p = 0; p < g.micro.size(); ++p) {
            const double v = ic.mean + ic.amplitude * std::cos(std::numbers::pi * g.micro.y1(p)) *
                                           std::cos(std::numbers::pi * g.micro.y2(p));
            rho.matrix().row(p).setConstant(v);
        }
        break;
    case InitialCondition::Kind::equilibrium: {
        const MacroField pi = equilibrium_pressure(g, problem.params, problem.mode);
        for (int x = 0; x < g.macro.size(); ++x) {
            rho.micro(x).setConstant((pi[x] + problem.params.ambient_pressure) /
                                     problem.params.gas_constant);
        }
        break;
    }
    case InitialCondition::Kind::nodal:
        if (ic.nodal.rows() != g.micro.size() || ic.nodal.cols() != g.macro.size()) {
            throw ShapeError("initial density must be " + std::to_string(g.micro.size()) + " x " +
                             std::to_string(g.macro.size()) + " (micro x macro)");
        }
        rho.matrix() = ic.nodal;
        break;
    }
    if (!rho.matrix().allFinite()) throw ConfigError("initial density is not finite");
    return rho;
}

StepResult advance_step(const MacroField& pi_n, const TwoScaleField& rho_n, const MicroOperator& op,
                        const Problem& problem, double t_next) {
    const Geometry& g = problem.geometry;
    const ModelParams& p = problem.params;
    const SolverOptions& o = problem.options;
    const int nx = g.macro.size();
    const int nr = static_cast<int>(g.micro.nodes(BoundaryPart::gamma_r).size());

    Matrix extra;
    if (problem.robin_source) {
        extra.resize(nr, nx);
        for (int x = 0; x < nx; ++x) problem.robin_source(t_next, x, extra.col(x));
    }

    auto sweep = [&](const MacroField& pi) {
        TwoScaleField rho(nx, g.micro.size());
        parallel_for(nx, o.workers, [&](int x) {
            if (extra.size() == 0) {
                rho.micro(x) = micro_step(rho_n.micro(x), pi[x], op, p);
            } else {
                const Vector drive =
                    op.coefficient().values() * (pi[x] + p.ambient_pressure) + extra.col(x);
                rho.micro(x) = micro_step_driven(rho_n.micro(x), drive, op, g.micro);
            }
        });
        return rho;
    };

    StepResult out;
    MacroField pi = pi_n;
    for (int it = 1; it <= o.max_couple; ++it) {
        const TwoScaleField rho = sweep(pi);
        const MacroField target = solve_elliptic(rho, g, p, problem.mode, pi, o.picard).pressure;
        MacroField next = pi + o.relaxation * (target - pi);
        out.last_update = std::sqrt(macro_l2_squared(next - pi, g.macro));
        const double scale = std::max(std::sqrt(macro_l2_squared(pi, g.macro)), 1.0);
        pi = std::move(next);
        out.iterations = it;
        if (out.last_update <= o.couple_tolerance * scale) {
            out.density = sweep(pi);
            out.pressure = std::move(pi);
            return out;
        }
    }
    std::ostringstream os;
    os << "coupling iteration did not converge at t = " << t_next << " after " << o.max_couple
       << " iterations (last update " << out.last_update << ")";
    throw CouplingError(os.str(), out.last_update, out.iterations);
}

void Trajectory::require_complete() const {
    if (failure) std::rethrow_exception(failure);
}

std::string Trajectory::failure_message() const {
    if (!failure) return {};
    try {
        std::rethrow_exception(failure);
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

std::string params_digest(const Problem& problem) {
    const ModelParams& p = problem.params;
    std::ostringstream os;
    os.precision(17);
    os << problem.geometry.macro.size() << ' ' << problem.geometry.macro.length() << ' '
       << problem.geometry.micro.points_per_side() << ' ' << to_string(problem.geometry.micro.robin_edge())
       << ' ' << p.permeability << ' ' << p.diffusivity << ' ' << p.gas_density << ' '
       << p.ambient_pressure << ' ' << p.gas_constant << ' ' << p.horizon << ' ' << p.time_step << ' '
       << p.pressure_exponent << ' ' << p.density_exponent << ' ' << p.amplitude << ' '
       << p.clamp_floor << ' ' << p.k_min << ' ' << p.k_max << ' ' << to_string(problem.mode);
    for (int j = 0; j < problem.k.size(); ++j) os << ' ' << problem.k[j];
    // FNV-1a, 64 bit
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : os.str()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Trajectory run_simulation(const Problem& problem) {
    const Geometry& g = problem.geometry;
    const ModelParams& p = problem.params;
    check_solver_options(problem.options);
    if (!(p.time_step > 0.0 && p.time_step <= p.horizon)) throw ConfigError("need 0 < dt <= T");

    if (!problem.allow_unverified) {
        const AssumptionReport report = validate_assumptions(p, g.macro, problem.mode, problem.box);
        if (!report.ok()) {
            throw ConfigError("model assumptions violated: " + report.failures() +
                              " (set allow_invalid to run anyway)");
        }
    }
    const MicroOperator op = assemble_micro_operator(g.micro, problem.k, p, problem.options.linear);
    TwoScaleField rho = make_initial_density(problem);
    MacroField pi = initial_pressure(rho, g, p, problem.mode, problem.options.picard);

    Trajectory traj;
    traj.params_digest = params_digest(problem);
    traj.macro_nodes = g.macro.size();
    traj.micro_points = g.micro.size();
    const int steps = p.step_count();
    traj.times.reserve(steps + 1);

    auto record = [&](double t, const MacroField& u, const TwoScaleField& v) {
        traj.times.push_back(t);
        traj.pressure.push_back(u);
        traj.density.push_back(v);
        traj.traces.push_back(extract_trace(v, BoundaryPart::gamma_n, g.micro));
    };
    record(0.0, pi, rho);

    try {
        for (int n = 1; n <= steps; ++n) {
            const double t = n * p.time_step;
            StepResult step = advance_step(pi, rho, op, problem, t);
            pi = std::move(step.pressure);
            rho = std::move(step.density);
            traj.coupling_iterations.push_back(step.iterations);
            record(t, pi, rho);
        }
    } catch (...) {
        traj.failure = std::current_exception();
    }
    return traj;
}

ScalingReport scaling_check(const Problem& problem, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("scaling factor must be positive");
    if (problem.mode != NonlinearityMode::power_mean) {
        throw ConfigError("scaling check needs the power_mean nonlinearity");
    }
    if (problem.robin_source) throw ConfigError("scaling check does not support an extra Robin source");

    Problem scaled = problem;
    scaled.params.ambient_pressure *= lambda;
    scaled.initial.kind = InitialCondition::Kind::nodal;
    scaled.initial.nodal = lambda * make_initial_density(problem).matrix();
    // The scaled run is expected to leave the sampling box used for the a-priori checks.
    scaled.allow_unverified = true;

    const Trajectory base = run_simulation(problem);
    base.require_complete();
    const Trajectory other = run_simulation(scaled);
    other.require_complete();

    ScalingReport report;
    report.lambda = lambda;
    for (std::size_t n = 0; n < base.times.size(); ++n) {
        report.pressure_dev =
            std::max(report.pressure_dev, relative_deviation(lambda * base.pressure[n], other.pressure[n]));
        report.density_dev = std::max(
            report.density_dev,
            relative_deviation(lambda * base.density[n].matrix(), other.density[n].matrix()));
    }
    report.max_rel_dev = std::max(report.pressure_dev, report.density_dev);
    return report;
}

double total_mass(const TwoScaleField& rho, const Geometry& g) {
    const auto wx = g.macro.weights();
    const auto cells = g.micro.cell_weights();
    double total = 0.0;
    for (int x = 0; x < g.macro.size(); ++x) {
        double cell = 0.0;
        for (int p = 0; p < g.micro.size(); ++p) cell += cells[p] * rho.micro(x)[p];
        total += wx[x] * cell;
    }
    return total;
}

double MassBalance::relative_defect() const noexcept {
    const double diff = std::abs(mass_rate - inflow);
    const double s = std::max({std::abs(mass_rate), std::abs(inflow), scale});
    return s > 0.0 ? diff / s : diff;
}

std::vector<MassBalance> mass_balance(const Trajectory& traj, const Problem& problem) {
    const Geometry& g = problem.geometry;
    const ModelParams& p = problem.params;
    const auto robin = g.micro.nodes(BoundaryPart::gamma_r);
    const auto sigma = g.micro.weights(BoundaryPart::gamma_r);
    const auto wx = g.macro.weights();
    const int nr = static_cast<int>(robin.size());

    std::vector<MassBalance> out;
    Vector extra(nr);
    for (int n = 1; n <= traj.steps(); ++n) {
        MassBalance b;
        b.mass_rate = (total_mass(traj.density[n], g) - total_mass(traj.density[n - 1], g)) / p.time_step;
        for (int x = 0; x < g.macro.size(); ++x) {
            extra.setZero();
            if (problem.robin_source) problem.robin_source(traj.times[n], x, extra);
            const double drive = traj.pressure[n][x] + p.ambient_pressure;
            for (int j = 0; j < nr; ++j) {
                const double rho_j = traj.density[n].micro(x)[robin[j]];
                const double in = problem.k[j] * drive + extra[j];
                const double out_term = problem.k[j] * p.gas_constant * rho_j;
                b.inflow += wx[x] * sigma[j] * (in - out_term);
                b.scale += wx[x] * sigma[j] * (std::abs(in) + std::abs(out_term));
            }
        }
        out.push_back(b);
    }
    return out;
}

Problem refine_problem(const Problem& problem) {
    if (problem.initial.kind == InitialCondition::Kind::nodal) {
        throw ConfigError("cannot refine a problem with a nodal initial density");
    }
    Problem fine = problem;
    const int n = problem.geometry.micro.points_per_side();
    fine.geometry.micro = build_micro_grid(2 * n - 1, problem.geometry.micro.robin_edge());
    fine.params.time_step = problem.params.time_step / 4.0;

    const Vector& coarse = problem.k.values();
    Vector k(2 * coarse.size() - 1);
    for (Eigen::Index j = 0; j < coarse.size(); ++j) {
        k[2 * j] = coarse[j];
        if (j + 1 < coarse.size()) k[2 * j + 1] = 0.5 * (coarse[j] + coarse[j + 1]);
    }
    fine.k = RobinCoefficient(std::move(k));
    return fine;
}

}  // namespace twoscale
