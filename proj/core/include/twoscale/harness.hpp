#pragma once

#include <string>
#include <vector>

#include "twoscale/coupled.hpp"

namespace twoscale {

/// dt sum_{n=1}^N (|u_n|^2_{L2} + |u_n'|^2_{L2}) over the macro interval.
double pressure_energy(const std::vector<MacroField>& u, const Geometry& g, double dt);
/// dt sum_{n=1}^N |v_n|^2_{L2(Omega; H1(Y))}
double density_energy(const std::vector<TwoScaleField>& v, const Geometry& g, double dt);

/// Largest sup-norm change of pressure or density from the initial level.
double max_time_deviation(const Trajectory& traj);

struct EnergyRun {
    std::string label;
    double solution = 0.0;  ///< |pi|^2_{L2(0,T;H1)} + |rho|^2_{L2(0,T;L2(Omega;H1(Y)))}
    double data = 0.0;      ///< |g|^2_{L2(0,T;L2(Omega;L2(Gamma_R)))} + |rho_I|^2_{L2(Omega;L2(Y))}
    double ratio = 0.0;
};

struct EnergyReport {
    std::vector<EnergyRun> runs;
    double constant = 0.0;  ///< max ratio
};

/// Ten runs with p_F = 0, an extra Robin source g and initial density v_I
/// drawn from fixed shape families.
EnergyReport energy_family(const Problem& base);

struct DataStabilityRun {
    std::string parameter;  ///< "k", "A", "D" or "rho_I"
    double magnitude = 0.0; ///< relative size of the perturbation
    double difference = 0.0;
    double perturbation = 0.0;
    double ratio = 0.0;
};

struct DataStabilityReport {
    std::vector<DataStabilityRun> runs;
    double constant = 0.0;  ///< max ratio
};

/// Perturbs k, A, D and rho_I one at a time by 2.5, 5, 7.5 and 10 percent and
/// compares |d pi|^2_{L2(0,T;H1_0)} + |d rho|^2_{L2(0,T;L2(Omega;H1(Y)))} with
/// |dk|^2_{L2(Gamma_R)} + |dA| + |dD| + |d rho_I|^2_{L2(Omega;L2(Y))}.
DataStabilityReport data_stability_sweep(const Problem& base);

}  // namespace twoscale
