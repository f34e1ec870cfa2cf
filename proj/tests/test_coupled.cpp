#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "twoscale/coupled.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/harness.hpp"
#include "twoscale/norms.hpp"

namespace twoscale {
namespace {

MicroOperator operator_for(const Problem& p) {
    return assemble_micro_operator(p.geometry.micro, p.k, p.params, p.options.linear);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

TEST(AdvanceStep, GlobalEquilibriumIsFixed) {
    Problem p = test::reference_problem();
    p.mode = NonlinearityMode::linear_test;
    p.params.amplitude = 0.0;
    const double rho_star = 0.75;
    p.params.ambient_pressure = p.params.gas_constant * rho_star;
    const TwoScaleField rho(8, 81, rho_star);
    const MacroField pi = MacroField::Zero(8);
    const StepResult r = advance_step(pi, rho, operator_for(p), p, p.params.time_step);
    EXPECT_LE(max_abs(r.pressure - pi), 1e-11);
    EXPECT_LE(max_abs(r.density.matrix() - rho.matrix()), 1e-11);
    EXPECT_LE(r.iterations, 2);
}

TEST(AdvanceStep, DegreeOneScaling) {
    const Problem p = test::reference_problem();
    const TwoScaleField rho = make_initial_density(p);
    const MacroField pi = initial_pressure(rho, p.geometry, p.params, p.mode);
    const StepResult base = advance_step(pi, rho, operator_for(p), p, p.params.time_step);
    for (double lambda : {0.5, 3.0}) {
        Problem q = p;
        q.params.ambient_pressure *= lambda;
        const StepResult scaled = advance_step(lambda * pi, lambda * rho, operator_for(q), q, q.params.time_step);
        EXPECT_LE(max_abs(scaled.pressure - lambda * base.pressure), 1e-9);
        EXPECT_LE(max_abs(scaled.density.matrix() - lambda * base.density.matrix()), 1e-9);
    }
}

TEST(RunSimulation, ReferenceCouplingIterations) {
    const Trajectory t = run_simulation(test::reference_problem());
    ASSERT_TRUE(t.complete());
    ASSERT_EQ(t.steps(), 20);
    for (int it : t.coupling_iterations) {
        EXPECT_LE(it, 20);
        EXPECT_LE(it, 3);  // measured on the reference config
    }
}

TEST(RunSimulation, EquilibriumPresetIsSteady) {
    Problem p = test::reference_problem();
    p.initial.kind = InitialCondition::Kind::equilibrium;
    // The default Picard tolerance leaves a drift of about 1.3e-10.
    p.options.picard.tolerance = 1e-12;
    const Trajectory t = run_simulation(p);
    ASSERT_TRUE(t.complete());
    EXPECT_LE(max_time_deviation(t), 1e-10);
}

TEST(RunSimulation, DecayLowersTotalMass) {
    Problem p = test::reference_problem();
    p.params.ambient_pressure = 0.0;
    p.params.amplitude = 0.0;
    p.initial.kind = InitialCondition::Kind::constant;
    p.initial.value = 1.0;
    const Trajectory t = run_simulation(p);
    ASSERT_TRUE(t.complete());
    for (int n = 1; n <= t.steps(); ++n) {
        EXPECT_LT(total_mass(t.density[n], p.geometry), total_mass(t.density[n - 1], p.geometry));
    }
}

TEST(RunSimulation, MassIdentityEveryStep) {
    std::mt19937_64 rng(51);
    Problem p = test::reference_problem();
    p.k = RobinCoefficient(test::uniform_vector(rng, 9, 0.5, 2.0));
    const Trajectory t = run_simulation(p);
    ASSERT_TRUE(t.complete());
    const auto balance = mass_balance(t, p);
    ASSERT_EQ(balance.size(), 20u);
    for (const auto& b : balance) EXPECT_LE(b.relative_defect(), 1e-9);
}

TEST(RunSimulation, SelfConvergenceRatio) {
    const Problem coarse = test::reference_problem();
    const Problem mid = refine_problem(coarse);
    const Problem fine = refine_problem(mid);
    ASSERT_EQ(fine.geometry.micro.points_per_side(), 33);
    const Trajectory a = run_simulation(coarse), b = run_simulation(mid), c = run_simulation(fine);
    ASSERT_TRUE(a.complete() && b.complete() && c.complete());
    // restrict every final density to the coarse nodes
    auto restrict = [](const TwoScaleField& f, int from) {
        const int stride = (from - 1) / 8;
        Matrix m(81, f.macro_size());
        for (int j = 0; j < 9; ++j) {
            for (int i = 0; i < 9; ++i) m.row(j * 9 + i) = f.matrix().row(j * stride * from + i * stride);
        }
        return TwoScaleField(m);
    };
    const Geometry& g = coarse.geometry;
    const double e1 = discrete_norm(restrict(a.density.back(), 9) - restrict(b.density.back(), 17), NormKind::l2_twoscale, g);
    const double e2 = discrete_norm(restrict(b.density.back(), 17) - restrict(c.density.back(), 33), NormKind::l2_twoscale, g);
    EXPECT_GE(e1 / e2, 3.0);
    EXPECT_LE(e1 / e2, 5.0);
}

TEST(RunSimulation, BitwiseDeterministicAcrossWorkers) {
    Problem p = test::reference_problem();
    const Trajectory a = run_simulation(p);
    const Trajectory b = run_simulation(p);
    p.options.workers = 4;
    const Trajectory c = run_simulation(p);
    for (int n = 0; n <= a.steps(); ++n) {
        EXPECT_TRUE(a.density[n] == b.density[n]);
        EXPECT_TRUE(a.density[n] == c.density[n]);
        EXPECT_TRUE(a.pressure[n] == c.pressure[n]);
        EXPECT_TRUE(a.traces[n] == c.traces[n]);
    }
    EXPECT_EQ(a.params_digest, c.params_digest);
}

TEST(RunSimulation, RefusesFailedAssumptions) {
    Problem p = test::reference_problem();
    p.params.pressure_exponent = 0.7;
    p.params.density_exponent = 0.2;
    EXPECT_THROW(run_simulation(p), ConfigError);
    p.allow_unverified = true;
    EXPECT_NO_THROW(run_simulation(p));
}

TEST(RunSimulation, CouplingFailureKeepsEarlierLevels) {
    Problem p = test::reference_problem();
    p.options.max_couple = 1;
    const Trajectory t = run_simulation(p);
    EXPECT_FALSE(t.complete());
    EXPECT_EQ(t.steps(), 0);
    EXPECT_THROW(t.require_complete(), CouplingError);
    EXPECT_NE(t.failure_message().find("coupl"), std::string::npos);
}

TEST(Scaling, IdentityAndHomogeneity) {
    const Problem p = test::reference_problem();
    EXPECT_LE(scaling_check(p, 1.0).max_rel_dev, 1e-13);
    EXPECT_LE(scaling_check(p, 2.0).max_rel_dev, 1e-8);
    EXPECT_LE(scaling_check(p, 0.5).max_rel_dev, 1e-8);
}

TEST(Refine, DoublesCellResolution) {
    Problem p = test::reference_problem();
    std::mt19937_64 rng(52);
    p.k = RobinCoefficient(test::uniform_vector(rng, 9, 0.5, 2.0));
    const Problem r = refine_problem(p);
    EXPECT_EQ(r.geometry.micro.points_per_side(), 17);
    EXPECT_DOUBLE_EQ(r.params.time_step, 0.0025);
    ASSERT_EQ(r.k.size(), 17);
    for (int j = 0; j < 9; ++j) EXPECT_EQ(r.k[2 * j], p.k[j]);
    EXPECT_DOUBLE_EQ(r.k[1], 0.5 * (p.k[0] + p.k[1]));
    p.initial.kind = InitialCondition::Kind::nodal;
    p.initial.nodal = Matrix::Constant(81, 8, 0.5);
    EXPECT_THROW(refine_problem(p), ConfigError);
}

TEST(InitialDensity, NodalShapeChecked) {
    Problem p = test::reference_problem();
    p.initial.kind = InitialCondition::Kind::nodal;
    p.initial.nodal = Matrix::Constant(80, 8, 0.5);
    EXPECT_THROW(make_initial_density(p), ShapeError);
}

}  // namespace
}  // namespace twoscale
