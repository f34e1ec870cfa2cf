#include "twoscale/harness.hpp"

#include <cmath>
#include <numbers>

#include "twoscale/errors.hpp"
#include "twoscale/norms.hpp"

namespace twoscale {

double pressure_energy(const std::vector<MacroField>& u, const Geometry& g, double dt) {
    double sum = 0.0;
    for (std::size_t n = 1; n < u.size(); ++n) {
        sum += dt * (macro_l2_squared(u[n], g.macro) + macro_gradient_squared(u[n], g.macro));
    }
    return sum;
}

double density_energy(const std::vector<TwoScaleField>& v, const Geometry& g, double dt) {
    double sum = 0.0;
    for (std::size_t n = 1; n < v.size(); ++n) sum += dt * twoscale_h1_squared(v[n], g);
    return sum;
}

double max_time_deviation(const Trajectory& traj) {
    double dev = 0.0;
    for (int n = 1; n <= traj.steps(); ++n) {
        dev = std::max(dev, (traj.pressure[n] - traj.pressure[0]).cwiseAbs().maxCoeff());
        dev = std::max(dev, (traj.density[n].matrix() - traj.density[0].matrix()).cwiseAbs().maxCoeff());
    }
    return dev;
}

namespace {

using std::numbers::pi;

struct Shape {
    double g_scale;
    int g_shape;  // 0: none
    double v_scale;
    int v_shape;  // 0: none
    const char* label;
};

double g_value(int shape, double t, double horizon, double x, double length, double s) {
    switch (shape) {
    case 1: return 1.0;
    case 2: return 1.0 + 0.5 * std::cos(pi * s);
    case 3: return (1.0 + t / horizon) * (1.0 + 0.5 * std::sin(pi * x / length));
    default: return 0.0;
    }
}

double v_value(int shape, double x, double length, double y1, double y2) {
    switch (shape) {
    case 1: return 1.0;
    case 2: return 1.0 + 0.5 * std::cos(pi * y1) * std::cos(pi * y2);
    case 3: return 1.0 + 0.5 * std::sin(pi * x / length);
    default: return 0.0;
    }
}

double solution_difference(const Trajectory& a, const Trajectory& b, const Geometry& g, double dt) {
    double sum = 0.0;
    for (int n = 1; n <= a.steps(); ++n) {
        sum += dt * macro_gradient_squared(a.pressure[n] - b.pressure[n], g.macro);
        sum += dt * twoscale_h1_squared(a.density[n] - b.density[n], g);
    }
    return sum;
}

Trajectory complete_run(const Problem& p) {
    Trajectory traj = run_simulation(p);
    traj.require_complete();
    return traj;
}

}  // namespace

EnergyReport energy_family(const Problem& base) {
    static constexpr Shape family[] = {
        {1.0, 1, 0.0, 0, "g=1"},          {0.0, 0, 1.0, 1, "v=1"},
        {1.0, 1, 1.0, 1, "g=1,v=1"},      {1.0, 2, 1.0, 2, "g=cos,v=cos"},
        {1.0, 3, 1.0, 3, "g=tx,v=x"},     {1.0, 2, 0.0, 0, "g=cos"},
        {0.0, 0, 1.0, 2, "v=cos"},        {0.0, 0, 1.0, 3, "v=x"},
        {1.0, 3, 0.0, 0, "g=tx"},         {0.5, 1, 2.0, 2, "g=1/2,v=2cos"},
    };
    const Geometry& geo = base.geometry;
    const auto robin = geo.micro.nodes(BoundaryPart::gamma_r);
    const int nr = static_cast<int>(robin.size());
    const double dt = base.params.time_step;
    const double horizon = base.params.step_count() * dt;
    const double length = geo.macro.length();
    const auto wx = geo.macro.weights();
    const auto sigma = geo.micro.weights(BoundaryPart::gamma_r);

    EnergyReport report;
    for (const Shape& shape : family) {
        Problem p = base;
        p.params.ambient_pressure = 0.0;
        p.initial.kind = InitialCondition::Kind::nodal;
        p.initial.nodal.resize(geo.micro.size(), geo.macro.size());
        for (int x = 0; x < geo.macro.size(); ++x) {
            for (int q = 0; q < geo.micro.size(); ++q) {
                p.initial.nodal(q, x) = shape.v_scale * v_value(shape.v_shape, geo.macro.coordinate(x), length,
                                                                geo.micro.y1(q), geo.micro.y2(q));
            }
        }
        const MacroGrid macro = geo.macro;
        p.robin_source = [shape, macro, nr, horizon, length](double t, int x, Eigen::Ref<Vector> out) {
            for (int j = 0; j < nr; ++j) {
                const double s = static_cast<double>(j) / (nr - 1);
                out[j] = shape.g_scale * g_value(shape.g_shape, t, horizon, macro.coordinate(x), length, s);
            }
        };

        const Trajectory traj = complete_run(p);
        EnergyRun run;
        run.label = shape.label;
        run.solution = pressure_energy(traj.pressure, geo, dt) + density_energy(traj.density, geo, dt);
        double g_norm = 0.0;
        Vector gv(nr);
        for (int n = 1; n <= traj.steps(); ++n) {
            for (int x = 0; x < geo.macro.size(); ++x) {
                p.robin_source(traj.times[n], x, gv);
                for (int j = 0; j < nr; ++j) g_norm += dt * wx[x] * sigma[j] * gv[j] * gv[j];
            }
        }
        run.data = g_norm + twoscale_l2_squared(TwoScaleField(p.initial.nodal), geo);
        run.ratio = run.solution / run.data;
        report.constant = std::max(report.constant, run.ratio);
        report.runs.push_back(run);
    }
    return report;
}

DataStabilityReport data_stability_sweep(const Problem& base) {
    const Geometry& geo = base.geometry;
    const double dt = base.params.time_step;
    const Trajectory reference = complete_run(base);
    const TwoScaleField rho_initial = make_initial_density(base);
    const auto sigma = geo.micro.weights(BoundaryPart::gamma_r);

    DataStabilityReport report;
    static constexpr double magnitudes[] = {0.025, 0.05, 0.075, 0.1};
    static constexpr const char* parameters[] = {"k", "A", "D", "rho_I"};
    for (const char* name : parameters) {
        const std::string which = name;
        for (const double s : magnitudes) {
            Problem p = base;
            double size = 0.0;
            if (which == "k") {
                const Vector dk = s * base.k.values();
                p.k = RobinCoefficient(base.k.values() + dk);
                for (Eigen::Index j = 0; j < dk.size(); ++j) size += sigma[j] * dk[j] * dk[j];
            } else if (which == "A") {
                p.params.permeability *= 1.0 + s;
                size = s * base.params.permeability;
            } else if (which == "D") {
                p.params.diffusivity *= 1.0 + s;
                size = s * base.params.diffusivity;
            } else {
                p.initial.kind = InitialCondition::Kind::nodal;
                p.initial.nodal = (1.0 + s) * rho_initial.matrix();
                size = s * s * twoscale_l2_squared(rho_initial, geo);
            }
            const Trajectory traj = complete_run(p);
            DataStabilityRun run{which, s, solution_difference(traj, reference, geo, dt), size, 0.0};
            run.ratio = run.difference / run.perturbation;
            report.constant = std::max(report.constant, run.ratio);
            report.runs.push_back(run);
        }
    }
    return report;
}

}  // namespace twoscale
