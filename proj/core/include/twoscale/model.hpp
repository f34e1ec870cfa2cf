#pragma once

#include <string>
#include <vector>

#include "twoscale/fields.hpp"
#include "twoscale/grid.hpp"

namespace twoscale {

/// Physical constants, time discretization and nonlinearity parameters.
/// Config keys in parentheses.
struct ModelParams {
    double permeability = 1.0;      // (A)
    double diffusivity = 1.0;       // (D) micro diffusion
    double gas_density = 1.0;       // (rho_F)
    double ambient_pressure = 1.0;  // (p_F)
    double gas_constant = 1.0;      // (R)
    double horizon = 0.2;           // (T)
    double time_step = 0.01;        // (dt)
    double pressure_exponent = 0.5; // (alpha)
    double density_exponent = 0.5;  // (beta)
    double amplitude = 1.0;         // (c_f)
    double clamp_floor = 1e-8;      // (eps_reg)
    double k_min = 0.1;
    double k_max = 10.0;

    double macro_coefficient() const noexcept { return permeability * gas_density; }
    /// round(T / dt)
    int step_count() const noexcept;
};

enum class NonlinearityMode {
    power_mean,   ///< c_f * P(pi)^alpha * P(<rho>_Y)^beta, P(s) = max(s, eps_reg)
    linear_test,  ///< c_f * <rho>_Y; manufactured solutions only
};

NonlinearityMode parse_mode(const std::string& name);
std::string to_string(NonlinearityMode mode);

/// Robin transfer coefficient, one value per Gamma_R node.
class RobinCoefficient {
public:
    RobinCoefficient() = default;
    explicit RobinCoefficient(Vector values) : values_(std::move(values)) {}
    static RobinCoefficient constant(int nodes, double value) {
        return RobinCoefficient(Vector::Constant(nodes, value));
    }

    const Vector& values() const noexcept { return values_; }
    int size() const noexcept { return static_cast<int>(values_.size()); }
    double operator[](int j) const { return values_[j]; }

    bool admissible(double k_min, double k_max) const noexcept;
    /// Throws AdmissibilityError naming the first offending node.
    void require_admissible(double k_min, double k_max) const;

private:
    Vector values_;
};

/// Trapezoid cell average over Y.
double micro_average(const MicroField& rho_x, const MicroGrid& grid);
Vector micro_averages(const TwoScaleField& rho, const MicroGrid& grid);

/// Pointwise nonlinearity f(u, m) with m the cell average.
double source_value(double pressure, double average, const ModelParams& p, NonlinearityMode mode);

struct SourcePartials {
    double d_pressure = 0.0;
    double d_average = 0.0;
};
/// Analytic partials; zero inside the clamped region.
SourcePartials source_partials(double pressure, double average, const ModelParams& p,
                               NonlinearityMode mode);

MacroField eval_f(const MacroField& pi, const TwoScaleField& rho, const Geometry& g,
                  const ModelParams& p, NonlinearityMode mode);
MacroField eval_f_from_averages(const MacroField& pi, const Vector& averages, const ModelParams& p,
                                NonlinearityMode mode);

/// Operating range sampled when estimating the Lipschitz constant in the
/// pressure argument.
struct SampleBox {
    double pressure_lo = 0.1;
    double pressure_hi = 1.0;
    double average_lo = 0.1;
    double average_hi = 1.0;
    int pressure_samples = 129;
    int average_samples = 17;
};

/// max |f(u1,v) - f(u2,v)| / |u1 - u2| over all sampled pairs in the box.
double estimate_lipschitz_constant(const ModelParams& p, NonlinearityMode mode, const SampleBox& box);

struct AssumptionCheck {
    std::string name;
    bool ok = true;
    double margin = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    double lipschitz_estimate = 0.0;
    double poincare = 0.0;
    /// Lipschitz estimate * c_P / (A rho_F)
    double contraction_product = 0.0;

    bool ok() const noexcept;
    /// Names of failed checks, comma separated.
    std::string failures() const;
};

AssumptionReport validate_assumptions(const ModelParams& p, const MacroGrid& macro,
                                      NonlinearityMode mode, const SampleBox& box = {});

/// Amplitude c_f that puts the contraction product at `target`.
double suggest_amplitude(const ModelParams& p, const MacroGrid& macro, NonlinearityMode mode,
                         const SampleBox& box, double target = 0.5);

}  // namespace twoscale
