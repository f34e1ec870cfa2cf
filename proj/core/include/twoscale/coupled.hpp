#pragma once

#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "twoscale/fields.hpp"
#include "twoscale/grid.hpp"
#include "twoscale/macro.hpp"
#include "twoscale/micro.hpp"
#include "twoscale/model.hpp"

namespace twoscale {

struct SolverOptions {
    LinearSolverOptions linear;
    PicardOptions picard;
    double couple_tolerance = 1e-9;
    int max_couple = 100;
    /// Under-relaxation of the pressure update inside the coupling loop, in (0, 1].
    double relaxation = 1.0;
    /// Threads for the per-macro-node micro sweep.  Results do not depend on it.
    int workers = 1;
};

/// Initial density rho_I.
struct InitialCondition {
    enum class Kind {
        constant,     ///< rho_I = value
        cosines,      ///< rho_I = mean + amplitude cos(pi y1) cos(pi y2)
        equilibrium,  ///< steady state: rho_I(x, .) = (pi*(x) + p_F) / R
        nodal,        ///< explicit values, micro nodes x macro nodes
    };
    Kind kind = Kind::cosines;
    double value = 0.5;
    double mean = 0.5;
    double amplitude = 0.25;
    Matrix nodal;
};

/// Extra Robin data g on Gamma_R, added to the drive k (pi + p_F).  Fills one
/// value per Gamma_R node for macro node x at time t.
using RobinSource = std::function<void(double t, int x, Eigen::Ref<Vector> out)>;

/// Everything a forward run needs.
struct Problem {
    Geometry geometry;
    ModelParams params;
    NonlinearityMode mode = NonlinearityMode::power_mean;
    RobinCoefficient k;
    InitialCondition initial;
    SolverOptions options;
    SampleBox box;
    /// Run even when validate_assumptions reports a failure.
    bool allow_unverified = false;
    RobinSource robin_source;
};

TwoScaleField make_initial_density(const Problem& problem);

/// Steady pressure pi* of -A rho_F pi'' = f(pi, (pi + p_F)/R), iterated to
/// the round-off floor.
MacroField equilibrium_pressure(const Geometry& g, const ModelParams& p, NonlinearityMode mode);

struct StepResult {
    MacroField pressure;
    TwoScaleField density;
    int iterations = 0;
    double last_update = 0.0;
};

/// One time step: alternate micro sweeps (pressure frozen) and macro solves
/// (density frozen) until the pressure update drops below
/// couple_tolerance * max(||pi||, 1).  The returned density is the micro
/// sweep for the returned pressure.  Throws CouplingError.
StepResult advance_step(const MacroField& pi_n, const TwoScaleField& rho_n, const MicroOperator& op,
                        const Problem& problem, double t_next);

struct Trajectory {
    std::vector<double> times;
    std::vector<MacroField> pressure;
    std::vector<TwoScaleField> density;
    /// Gamma_N traces, one per time level.
    std::vector<TraceArray> traces;
    /// Coupling iterations per step (times.size() - 1 entries).
    std::vector<int> coupling_iterations;
    std::string params_digest;
    int macro_nodes = 0;
    int micro_points = 0;
    /// Set when stepping failed; the levels before the failure are kept.
    std::exception_ptr failure;

    int steps() const noexcept { return times.empty() ? 0 : static_cast<int>(times.size()) - 1; }
    bool complete() const noexcept { return !failure; }
    void require_complete() const;
    std::string failure_message() const;
};

/// pi_0 = initial_pressure(rho_I), then round(T/dt) coupled steps.  Refuses to
/// start (ConfigError) when validate_assumptions fails and the problem does
/// not allow it.
Trajectory run_simulation(const Problem& problem);

/// Stable text digest of the numerics-relevant parameters.
std::string params_digest(const Problem& problem);

struct ScalingReport {
    double lambda = 1.0;
    double max_rel_dev = 0.0;
    double pressure_dev = 0.0;
    double density_dev = 0.0;
};

/// Runs (rho_I, p_F) and (lambda rho_I, lambda p_F) and compares lambda times
/// the first run against the second, max over time levels of the relative
/// sup-norm deviation.
ScalingReport scaling_check(const Problem& problem, double lambda);

/// Sum_x w_x Sum_p M_p rho_p.
double total_mass(const TwoScaleField& rho, const Geometry& g);

struct MassBalance {
    double mass_rate = 0.0;  ///< (M(rho^{n+1}) - M(rho^n)) / dt
    double inflow = 0.0;     ///< Sum_x w_x Sum_j sigma_j (k_j (pi + p_F - R rho_j) + g_j)
    double scale = 0.0;      ///< gross size of the exchange terms
    double relative_defect() const noexcept;
};

/// Per-step mass balance of a trajectory.
std::vector<MassBalance> mass_balance(const Trajectory& traj, const Problem& problem);

/// Coarse problem -> n_y' = 2 n_y - 1, dt' = dt / 4; k is interpolated along Gamma_R.
Problem refine_problem(const Problem& problem);

}  // namespace twoscale
