#include "twoscale/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/norms.hpp"

namespace twoscale {

int ModelParams::step_count() const noexcept {
    return static_cast<int>(std::lround(horizon / time_step));
}

NonlinearityMode parse_mode(const std::string& name) {
    if (name == "power_mean") return NonlinearityMode::power_mean;
    if (name == "linear_test") return NonlinearityMode::linear_test;
    throw ConfigError("mode must be power_mean or linear_test, got '" + name + "'");
}

std::string to_string(NonlinearityMode mode) {
    return mode == NonlinearityMode::power_mean ? "power_mean" : "linear_test";
}

bool RobinCoefficient::admissible(double k_min, double k_max) const noexcept {
    for (Eigen::Index j = 0; j < values_.size(); ++j) {
        if (!(values_[j] >= k_min && values_[j] <= k_max)) return false;
    }
    return true;
}

void RobinCoefficient::require_admissible(double k_min, double k_max) const {
    for (Eigen::Index j = 0; j < values_.size(); ++j) {
        if (!(values_[j] >= k_min && values_[j] <= k_max)) {
            std::ostringstream os;
            os << "Robin coefficient k[" << j << "] = " << values_[j] << " outside [" << k_min
               << ", " << k_max << "]";
            throw AdmissibilityError(os.str());
        }
    }
}

double micro_average(const MicroField& rho_x, const MicroGrid& grid) {
    if (rho_x.size() != grid.size()) throw ShapeError("micro field does not match micro grid");
    const auto w = grid.cell_weights();
    double sum = 0.0;
    for (int p = 0; p < grid.size(); ++p) sum += w[p] * rho_x[p];
    return sum;  // |Y| = 1
}

Vector micro_averages(const TwoScaleField& rho, const MicroGrid& grid) {
    Vector m(rho.macro_size());
    for (int x = 0; x < rho.macro_size(); ++x) m[x] = micro_average(rho.micro(x), grid);
    return m;
}

double source_value(double pressure, double average, const ModelParams& p, NonlinearityMode mode) {
    if (mode == NonlinearityMode::linear_test) return p.amplitude * average;
    const double u = std::max(pressure, p.clamp_floor);
    const double m = std::max(average, p.clamp_floor);
    return p.amplitude * std::pow(u, p.pressure_exponent) * std::pow(m, p.density_exponent);
}

SourcePartials source_partials(double pressure, double average, const ModelParams& p,
                               NonlinearityMode mode) {
    if (mode == NonlinearityMode::linear_test) return {0.0, p.amplitude};
    SourcePartials d;
    const double u = std::max(pressure, p.clamp_floor);
    const double m = std::max(average, p.clamp_floor);
    const double value = p.amplitude * std::pow(u, p.pressure_exponent) * std::pow(m, p.density_exponent);
    if (pressure > p.clamp_floor) d.d_pressure = p.pressure_exponent * value / u;
    if (average > p.clamp_floor) d.d_average = p.density_exponent * value / m;
    return d;
}

MacroField eval_f_from_averages(const MacroField& pi, const Vector& averages, const ModelParams& p,
                                NonlinearityMode mode) {
    if (pi.size() != averages.size()) throw ShapeError("pressure and averages differ in length");
    MacroField f(pi.size());
    for (Eigen::Index i = 0; i < pi.size(); ++i) f[i] = source_value(pi[i], averages[i], p, mode);
    return f;
}

MacroField eval_f(const MacroField& pi, const TwoScaleField& rho, const Geometry& g,
                  const ModelParams& p, NonlinearityMode mode) {
    if (pi.size() != g.macro.size() || !rho.matches(g)) {
        throw ShapeError("eval_f: fields do not match grids");
    }
    return eval_f_from_averages(pi, micro_averages(rho, g.micro), p, mode);
}

double estimate_lipschitz_constant(const ModelParams& p, NonlinearityMode mode, const SampleBox& box) {
    if (!(box.pressure_hi > box.pressure_lo) || !(box.average_hi >= box.average_lo) ||
        box.pressure_samples < 2 || box.average_samples < 1) {
        throw ConfigError("lipschitz sample box is empty");
    }
    const int nu = box.pressure_samples;
    const int nv = box.average_samples;
    std::vector<double> us(nu);
    for (int i = 0; i < nu; ++i) {
        us[i] = box.pressure_lo + (box.pressure_hi - box.pressure_lo) * i / (nu - 1);
    }
    double best = 0.0;
    std::vector<double> fu(nu);
    for (int a = 0; a < nv; ++a) {
        const double v = nv == 1 ? box.average_lo
                                 : box.average_lo + (box.average_hi - box.average_lo) * a / (nv - 1);
        for (int i = 0; i < nu; ++i) fu[i] = source_value(us[i], v, p, mode);
        for (int i = 0; i < nu; ++i) {
            for (int j = i + 1; j < nu; ++j) {
                best = std::max(best, std::abs(fu[i] - fu[j]) / (us[j] - us[i]));
            }
        }
    }
    return best;
}

bool AssumptionReport::ok() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.ok; });
}

std::string AssumptionReport::failures() const {
    std::string out;
    for (const auto& c : checks) {
        if (c.ok) continue;
        if (!out.empty()) out += ", ";
        out += c.name;
    }
    return out;
}

AssumptionReport validate_assumptions(const ModelParams& p, const MacroGrid& macro,
                                      NonlinearityMode mode, const SampleBox& box) {
    AssumptionReport r;
    auto positive = [&](const char* name, double v) {
        r.checks.push_back({name, v > 0.0, v, v > 0.0 ? "" : "must be positive"});
    };
    positive("A>0", p.permeability);
    positive("D>0", p.diffusivity);
    positive("rho_F>0", p.gas_density);
    positive("R>0", p.gas_constant);
    positive("T>0", p.horizon);
    r.checks.push_back({"0<dt<=T", p.time_step > 0.0 && p.time_step <= p.horizon,
                        p.horizon - p.time_step, "time step must lie in (0, T]"});
    r.checks.push_back({"p_F>=0", p.ambient_pressure >= 0.0, p.ambient_pressure, ""});
    r.checks.push_back({"c_f>=0", p.amplitude >= 0.0, p.amplitude, ""});
    r.checks.push_back({"eps_reg>=0", p.clamp_floor >= 0.0, p.clamp_floor, ""});
    r.checks.push_back({"0<k_min<=k_max", p.k_min > 0.0 && p.k_min <= p.k_max, p.k_max - p.k_min,
                        "admissible set needs 0 < k_min <= k_max"});

    positive("alpha>0", p.pressure_exponent);
    positive("beta>0", p.density_exponent);
    const double sum_defect = p.pressure_exponent + p.density_exponent - 1.0;
    r.checks.push_back({"alpha+beta", std::abs(sum_defect) <= 1e-12, -std::abs(sum_defect),
                        std::abs(sum_defect) <= 1e-12 ? "" : "alpha+beta≠1"});

    r.lipschitz_estimate = estimate_lipschitz_constant(p, mode, box);
    r.poincare = poincare_constant(macro);
    const double coeff = p.macro_coefficient();
    r.contraction_product = coeff > 0.0 ? r.lipschitz_estimate * r.poincare / coeff
                                        : std::numeric_limits<double>::infinity();
    const double margin = 1.0 - r.contraction_product;
    std::ostringstream os;
    os << "C*=" << r.lipschitz_estimate << " c_P=" << r.poincare
       << " product=" << r.contraction_product;
    r.checks.push_back({"C*c_P<1", margin > 0.0, margin, os.str()});
    return r;
}

double suggest_amplitude(const ModelParams& p, const MacroGrid& macro, NonlinearityMode mode,
                         const SampleBox& box, double target) {
    ModelParams unit = p;
    unit.amplitude = 1.0;
    const double lip = estimate_lipschitz_constant(unit, mode, box);
    if (lip <= 0.0) return p.amplitude;
    return target * p.macro_coefficient() / (lip * poincare_constant(macro));
}

}  // namespace twoscale
