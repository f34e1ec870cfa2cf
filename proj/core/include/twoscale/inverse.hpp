#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twoscale/coupled.hpp"
#include "twoscale/fields.hpp"

namespace twoscale {

/// Gamma_N trace samples at steps 1..N, flattened as (step, macro node,
/// Gamma_N node).
struct MeasurementSet {
    int steps = 0;
    int macro_nodes = 0;
    int boundary_nodes = 0;
    double time_step = 0.0;
    Vector values;
    /// Relative noise level delta (0 for clean data).
    double noise_level = 0.0;
    /// Expected weighted norm of the added noise, delta * rms * sqrt(sum of weights).
    double noise_norm = 0.0;
    std::uint64_t seed = 0;
    /// Parameter digest of the generating run.
    std::string provenance;
    /// Coefficient used to generate the data, when known.
    Vector true_coefficient;
};

/// Flattened Gamma_N traces of steps 1..N.
Vector flatten_traces(const Trajectory& traj);

/// Clean measurement from a complete trajectory of `problem`.
MeasurementSet measure(const Problem& problem, const Trajectory& traj);

/// Adds i.i.d. Gaussian noise with standard deviation delta * rms(values).
void add_noise(MeasurementSet& meas, double delta, std::uint64_t seed, const Geometry& g);

/// ||k||_{L2(Gamma_R)} with the trapezoid weights of Gamma_R.
double robin_norm(const Vector& k, const Geometry& g);

/// J(k) = 1/2 ||trace(rho(k)) - meas||_W^2 + gamma/2 ||k - k_ref||^2_{L2(Gamma_R)}.
/// The most recent forward run is cached.
class OutputLeastSquares {
public:
    OutputLeastSquares(Problem problem, MeasurementSet meas, double gamma, Vector k_ref);

    double objective(const Vector& k) const;
    /// L2(Gamma_R) Riesz gradient: Sigma_R^{-1} J^T W r + gamma (k - k_ref).
    Vector gradient(const Vector& k, int workers = 1) const;
    /// ||trace(rho(k)) - meas||_W
    double misfit(const Vector& k) const;

    struct Linearization {
        double objective = 0.0;
        double misfit = 0.0;
        Vector residual;  ///< trace - meas, flattened
        Matrix jacobian;  ///< raw trace Jacobian, one column per Gamma_R node
        Vector gradient;
    };
    Linearization linearize(const Vector& k, int workers = 1) const;

    const Vector& weights() const noexcept { return weights_; }
    const Problem& problem() const noexcept { return problem_; }
    const MeasurementSet& measurement() const noexcept { return meas_; }
    double gamma() const noexcept { return gamma_; }
    const Vector& reference() const noexcept { return k_ref_; }
    /// Number of forward solves so far.
    int forward_solves() const noexcept { return solves_; }

private:
    const Trajectory& forward(const Vector& k) const;
    Vector residual(const Trajectory& traj) const;

    Problem problem_;
    MeasurementSet meas_;
    double gamma_;
    Vector k_ref_;
    Vector weights_;
    Vector sigma_;
    mutable std::optional<std::pair<Vector, Trajectory>> cache_;
    mutable int solves_ = 0;
};

enum class Termination { gradient_tol, discrepancy, max_iter };
std::string to_string(Termination t);

struct IdentificationOptions {
    double gamma = 1e-10;
    /// Empty selects k0.
    Vector k_ref;
    /// Stop when ||g|| <= tol_g ||g_0|| (L2(Gamma_R) norm), or when ||g|| is
    /// below 1e-12 of the gradient the raw data would produce.
    double tol_g = 1e-8;
    int max_iter = 50;
    /// Discrepancy factor tau.
    double tau = 1.2;
    int max_halvings = 30;
    double armijo = 1e-4;
    /// Noisy data only: damping is chosen so the linearized residual drops to
    /// this fraction of the current residual.
    double lm_target = 0.7;
    int workers = 1;
};

struct IdentificationResult {
    RobinCoefficient k;
    std::vector<double> objective_history;
    std::vector<double> gradient_history;
    std::vector<double> misfit_history;
    /// Every iterate, starting with k0.
    std::vector<Vector> iterates;
    int iterations = 0;
    Termination reason = Termination::max_iter;
    /// ||k - k_true|| / ||k_true|| in L2(Gamma_R); NaN without ground truth.
    double relative_error = 0.0;
};

/// Projected Gauss-Newton with Levenberg damping and Armijo backtracking.
/// Step: (J^T W J + (gamma + mu) Sigma_R) s = -(J^T W r + gamma Sigma_R (k - k_ref)),
/// k <- clip(k + eta s).  Throws StagnationError after max_halvings.
IdentificationResult identify(const Problem& problem, const MeasurementSet& meas, const Vector& k0,
                              const IdentificationOptions& options = {});

struct StabilityPair {
    Vector k1;
    Vector k2;
    double data_distance = 0.0;         ///< ||trace(k2) - trace(k1)||_W
    double coefficient_distance = 0.0;  ///< ||k2 - k1||_{L2(Gamma_R)}
    double ratio = 0.0;
    bool degenerate = false;
};

struct StabilityScanReport {
    double radius = 0.0;
    std::vector<StabilityPair> pairs;
    /// min ratio over non-degenerate pairs
    double c_hat = 0.0;
    int degenerate = 0;
};

/// Evaluates explicit pairs; identical pairs are marked degenerate and excluded.
StabilityScanReport evaluate_pairs(const Problem& problem, std::vector<StabilityPair> pairs,
                                   int workers = 1);

/// Draws n_samples pairs uniformly in the L2(Gamma_R) ball of radius a about
/// k_star (seeded) and evaluates them.
StabilityScanReport stability_scan(const Problem& problem, const Vector& k_star, double a,
                                   int n_samples, std::uint64_t seed, int workers = 1);

}  // namespace twoscale
