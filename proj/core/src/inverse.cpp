#include "twoscale/inverse.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/parallel.hpp"
#include "twoscale/sensitivity.hpp"

namespace twoscale {

namespace {

Vector robin_weights(const Geometry& g) {
    const auto s = g.micro.weights(BoundaryPart::gamma_r);
    return Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
}

Vector clip(const Vector& k, double lo, double hi) { return k.cwiseMax(lo).cwiseMin(hi); }

/// Damping for noisy data: the linearized residual ||r + J s(mu)||_W is
/// placed at max(target ||r||_W, floor) by bisection in log mu.  A floor above
/// the noise norm keeps the step from fitting noise along weakly observed
/// directions.
template <class Step>
double residual_damping(const OutputLeastSquares::Linearization& lin, const Vector& w, Step&& step,
                        double target, double floor, double scale) {
    auto linear_residual = [&](double mu) {
        const Vector r = lin.residual + lin.jacobian * step(mu);
        return std::sqrt(w.dot(r.cwiseAbs2()));
    };
    const double goal = std::max(target * lin.misfit, floor);
    double lo = std::log(1e-14 * scale);
    double hi = std::log(1e4 * scale);
    if (linear_residual(std::exp(lo)) >= goal) return std::exp(lo);
    if (linear_residual(std::exp(hi)) <= goal) return std::exp(hi);
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (linear_residual(std::exp(mid)) > goal ? hi : lo) = mid;
    }
    return std::exp(lo);
}

}  // namespace

Vector flatten_traces(const Trajectory& traj) {
    if (traj.traces.empty()) return {};
    const Eigen::Index nx = traj.traces[0].rows();
    const Eigen::Index nn = traj.traces[0].cols();
    Vector out(traj.steps() * nx * nn);
    for (int n = 1; n <= traj.steps(); ++n) {
        for (Eigen::Index x = 0; x < nx; ++x) {
            for (Eigen::Index i = 0; i < nn; ++i) out[((n - 1) * nx + x) * nn + i] = traj.traces[n](x, i);
        }
    }
    return out;
}

MeasurementSet measure(const Problem& problem, const Trajectory& traj) {
    traj.require_complete();
    MeasurementSet m;
    m.steps = traj.steps();
    m.macro_nodes = problem.geometry.macro.size();
    m.boundary_nodes = static_cast<int>(problem.geometry.micro.nodes(BoundaryPart::gamma_n).size());
    m.time_step = problem.params.time_step;
    m.values = flatten_traces(traj);
    m.provenance = traj.params_digest;
    m.true_coefficient = problem.k.values();
    return m;
}

void add_noise(MeasurementSet& meas, double delta, std::uint64_t seed, const Geometry& g) {
    if (!(delta >= 0.0)) throw ConfigError("noise level must be non-negative");
    const double rms = meas.values.size() ? std::sqrt(meas.values.squaredNorm() / meas.values.size()) : 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < meas.values.size(); ++i) meas.values[i] += delta * rms * normal(rng);
    const Vector w = trace_weights(g, meas.time_step, meas.steps);
    meas.noise_level = delta;
    meas.noise_norm = delta * rms * std::sqrt(w.sum());
    meas.seed = seed;
}

double robin_norm(const Vector& k, const Geometry& g) {
    const Vector s = robin_weights(g);
    if (k.size() != s.size()) throw ShapeError("vector does not match Gamma_R");
    return std::sqrt(s.dot(k.cwiseAbs2()));
}

OutputLeastSquares::OutputLeastSquares(Problem problem, MeasurementSet meas, double gamma, Vector k_ref)
    : problem_(std::move(problem)), meas_(std::move(meas)), gamma_(gamma), k_ref_(std::move(k_ref)) {
    const Geometry& g = problem_.geometry;
    const int nn = static_cast<int>(g.micro.nodes(BoundaryPart::gamma_n).size());
    if (meas_.steps != problem_.params.step_count() || meas_.macro_nodes != g.macro.size() ||
        meas_.boundary_nodes != nn || meas_.values.size() != static_cast<Eigen::Index>(meas_.steps) * g.macro.size() * nn) {
        throw ShapeError("measurement shape does not match the problem");
    }
    if (!meas_.values.allFinite()) throw ConfigError("measurement contains non-finite values");
    if (!(gamma_ >= 0.0)) throw ConfigError("gamma must be non-negative");
    sigma_ = robin_weights(g);
    if (k_ref_.size() == 0) k_ref_ = Vector::Zero(sigma_.size());
    if (k_ref_.size() != sigma_.size()) throw ShapeError("k_ref does not match Gamma_R");
    weights_ = trace_weights(g, problem_.params.time_step, meas_.steps);
}

const Trajectory& OutputLeastSquares::forward(const Vector& k) const {
    if (cache_ && cache_->first.size() == k.size() && cache_->first == k) return cache_->second;
    RobinCoefficient coeff(k);
    coeff.require_admissible(problem_.params.k_min, problem_.params.k_max);
    Problem p = problem_;
    p.k = std::move(coeff);
    Trajectory traj = run_simulation(p);
    traj.require_complete();
    ++solves_;
    cache_.emplace(k, std::move(traj));
    return cache_->second;
}

Vector OutputLeastSquares::residual(const Trajectory& traj) const { return flatten_traces(traj) - meas_.values; }

double OutputLeastSquares::objective(const Vector& k) const {
    const Vector r = residual(forward(k));
    const Vector dk = k - k_ref_;
    return 0.5 * weights_.dot(r.cwiseAbs2()) + 0.5 * gamma_ * sigma_.dot(dk.cwiseAbs2());
}

double OutputLeastSquares::misfit(const Vector& k) const {
    return std::sqrt(weights_.dot(residual(forward(k)).cwiseAbs2()));
}

OutputLeastSquares::Linearization OutputLeastSquares::linearize(const Vector& k, int workers) const {
    Linearization lin;
    const Trajectory& traj = forward(k);
    lin.residual = residual(traj);
    const Vector dk = k - k_ref_;
    const double data = weights_.dot(lin.residual.cwiseAbs2());
    lin.misfit = std::sqrt(data);
    lin.objective = 0.5 * data + 0.5 * gamma_ * sigma_.dot(dk.cwiseAbs2());
    Problem p = problem_;
    p.k = RobinCoefficient(k);
    lin.jacobian = SensitivitySolver(p, traj).trace_jacobian(workers);
    lin.gradient = (lin.jacobian.transpose() * weights_.cwiseProduct(lin.residual)).cwiseQuotient(sigma_) +
                   gamma_ * dk;
    return lin;
}

Vector OutputLeastSquares::gradient(const Vector& k, int workers) const { return linearize(k, workers).gradient; }

std::string to_string(Termination t) {
    switch (t) {
    case Termination::gradient_tol: return "gradient_tol";
    case Termination::discrepancy: return "discrepancy";
    case Termination::max_iter: return "max_iter";
    }
    return "unknown";
}

IdentificationResult identify(const Problem& problem, const MeasurementSet& meas, const Vector& k0,
                              const IdentificationOptions& options) {
    const ModelParams& p = problem.params;
    RobinCoefficient(k0).require_admissible(p.k_min, p.k_max);
    if (options.max_iter < 0 || options.max_halvings < 1) throw ConfigError("invalid iteration limits");
    const OutputLeastSquares ols(problem, meas, options.gamma, options.k_ref.size() ? options.k_ref : k0);
    const Geometry& g = problem.geometry;
    const Vector sigma = robin_weights(g);

    IdentificationResult result;
    Vector k = k0;
    double mu = -1.0;
    double g0 = 0.0;
    double floor_g = 0.0;
    for (int it = 0;; ++it) {
        const auto lin = ols.linearize(k, options.workers);
        const double gnorm = robin_norm(lin.gradient, g);
        result.objective_history.push_back(lin.objective);
        result.gradient_history.push_back(gnorm);
        result.misfit_history.push_back(lin.misfit);
        result.iterates.push_back(k);
        result.iterations = it;
        if (it == 0) {
            g0 = gnorm;
            // Gradient size when the residual is as large as the data; below
            // 1e-12 of it the residual is round-off.
            const Vector data_gradient =
                (lin.jacobian.transpose() * ols.weights().cwiseProduct(meas.values)).cwiseQuotient(sigma);
            floor_g = 1e-12 * robin_norm(data_gradient, g);
        }
        if (gnorm <= options.tol_g * g0 || gnorm <= floor_g) {
            result.reason = Termination::gradient_tol;
            break;
        }
        if (meas.noise_level > 0.0 && lin.misfit <= options.tau * meas.noise_norm) {
            result.reason = Termination::discrepancy;
            break;
        }
        if (it == options.max_iter) {
            result.reason = Termination::max_iter;
            break;
        }

        const Matrix h = lin.jacobian.transpose() * ols.weights().asDiagonal() * lin.jacobian;
        const double scale = h.diagonal().cwiseQuotient(sigma).maxCoeff();
        const Vector rhs = -sigma.cwiseProduct(lin.gradient);
        auto step = [&](double damping) {
            Matrix a = h;
            a.diagonal() += (options.gamma + damping) * sigma;
            return Vector(a.ldlt().solve(rhs));
        };
        if (meas.noise_level > 0.0) {
            const double floor = 0.5 * (1.0 + options.tau) * meas.noise_norm;
            mu = residual_damping(lin, ols.weights(), step, options.lm_target, floor, scale);
        } else if (mu < 0.0) {
            mu = 1e-6 * scale;
        }
        const Vector s = step(mu);

        // Armijo backtracking along the projected path.
        double eta = 1.0;
        bool accepted = false;
        int halvings = 0;
        Vector trial;
        for (; halvings <= options.max_halvings; ++halvings, eta *= 0.5) {
            trial = clip(k + eta * s, p.k_min, p.k_max);
            const double predicted = rhs.dot(trial - k);  // = -<Sigma g, trial - k>
            if (ols.objective(trial) <= lin.objective - options.armijo * predicted) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            std::ostringstream os;
            os << "line search failed after " << options.max_halvings << " halvings at iteration " << it
               << " (objective " << lin.objective << ", gradient norm " << gnorm << ", damping " << mu << ")";
            throw StagnationError(os.str());
        }
        mu = halvings == 0 ? std::max(mu / 10.0, 1e-14) : mu * std::pow(4.0, halvings);
        k = trial;
    }
    result.k = RobinCoefficient(k);
    if (meas.true_coefficient.size() == k.size()) {
        result.relative_error = robin_norm(k - meas.true_coefficient, g) / robin_norm(meas.true_coefficient, g);
    } else {
        result.relative_error = std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

StabilityScanReport evaluate_pairs(const Problem& problem, std::vector<StabilityPair> pairs, int workers) {
    const Geometry& g = problem.geometry;
    const Vector w = trace_weights(g, problem.params.time_step, problem.params.step_count());
    auto traces = [&](const Vector& k) {
        Problem p = problem;
        p.k = RobinCoefficient(k);
        p.options.workers = 1;
        const Trajectory traj = run_simulation(p);
        traj.require_complete();
        return flatten_traces(traj);
    };
    parallel_for(static_cast<int>(pairs.size()), workers, [&](int i) {
        StabilityPair& pair = pairs[static_cast<std::size_t>(i)];
        pair.coefficient_distance = robin_norm(pair.k2 - pair.k1, g);
        if (pair.coefficient_distance == 0.0) {
            pair.degenerate = true;
            return;
        }
        const Vector diff = traces(pair.k2) - traces(pair.k1);
        pair.data_distance = std::sqrt(w.dot(diff.cwiseAbs2()));
        pair.ratio = pair.data_distance / pair.coefficient_distance;
    });

    StabilityScanReport report;
    report.c_hat = std::numeric_limits<double>::infinity();
    for (const auto& pair : pairs) {
        if (pair.degenerate) {
            ++report.degenerate;
        } else {
            report.c_hat = std::min(report.c_hat, pair.ratio);
        }
    }
    if (report.degenerate == static_cast<int>(pairs.size())) report.c_hat = 0.0;
    report.pairs = std::move(pairs);
    return report;
}

StabilityScanReport stability_scan(const Problem& problem, const Vector& k_star, double a, int n_samples,
                                   std::uint64_t seed, int workers) {
    if (n_samples < 2) throw ConfigError("stability scan needs at least 2 samples");
    if (!(a > 0.0)) throw ConfigError("neighbourhood radius must be positive");
    const Geometry& g = problem.geometry;
    const Vector sigma = robin_weights(g);
    if (k_star.size() != sigma.size()) throw ShapeError("k_star does not match Gamma_R");
    const Eigen::Index dim = sigma.size();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    // Uniform in the Euclidean ball for Sigma^{1/2}(k - k*), mapped back.
    auto draw = [&] {
        Vector xi(dim);
        for (Eigen::Index j = 0; j < dim; ++j) xi[j] = normal(rng);
        const double radius = a * std::pow(uniform(rng), 1.0 / static_cast<double>(dim));
        Vector k = k_star + (radius / xi.norm()) * xi.cwiseQuotient(sigma.cwiseSqrt());
        if (!RobinCoefficient(k).admissible(problem.params.k_min, problem.params.k_max)) {
            throw ConfigError("neighbourhood of radius a leaves [k_min, k_max]");
        }
        return k;
    };
    std::vector<StabilityPair> pairs(static_cast<std::size_t>(n_samples));
    for (auto& pair : pairs) {
        pair.k1 = draw();
        pair.k2 = draw();
    }
    StabilityScanReport report = evaluate_pairs(problem, std::move(pairs), workers);
    report.radius = a;
    return report;
}

}  // namespace twoscale
