#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/model.hpp"
#include "twoscale/norms.hpp"

namespace twoscale {
namespace {

ModelParams unit_amplitude() {
    ModelParams p;
    p.amplitude = 1.0;
    return p;
}

TEST(Nonlinearity, SquareRootProduct) {
    EXPECT_NEAR(source_value(4.0, 9.0, unit_amplitude(), NonlinearityMode::power_mean), 6.0, 1e-15);
}

TEST(Nonlinearity, SeparateScalingOfArguments) {
    EXPECT_NEAR(source_value(8.0, 27.0, unit_amplitude(), NonlinearityMode::power_mean), 14.6969, 1e-4);
}

TEST(Nonlinearity, ZeroPressureWithoutClamp) {
    ModelParams p = unit_amplitude();
    p.clamp_floor = 0.0;
    const Geometry g{MacroGrid(5, 1.0), build_micro_grid(3, Edge::left)};
    const MacroField f = eval_f(MacroField::Zero(5), TwoScaleField(5, 9, 2.0), g, p, NonlinearityMode::power_mean);
    EXPECT_TRUE((f.array() == 0.0).all());
}

TEST(Nonlinearity, EvalFUsesCellAverages) {
    const Geometry g{MacroGrid(5, 1.0), build_micro_grid(5, Edge::left)};
    const MacroField f = eval_f(MacroField::Constant(5, 4.0), TwoScaleField(5, 25, 9.0), g, unit_amplitude(),
                                NonlinearityMode::power_mean);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(f[i], 6.0, 1e-14);
}

TEST(Nonlinearity, PartialsMatchCentralDifferences) {
    const ModelParams p = unit_amplitude();
    const double u = 0.7, m = 0.4, h = 1e-6;
    const SourcePartials d = source_partials(u, m, p, NonlinearityMode::power_mean);
    const auto f = [&](double a, double b) { return source_value(a, b, p, NonlinearityMode::power_mean); };
    EXPECT_NEAR(d.d_pressure, (f(u + h, m) - f(u - h, m)) / (2 * h), 1e-8);
    EXPECT_NEAR(d.d_average, (f(u, m + h) - f(u, m - h)) / (2 * h), 1e-8);
    const SourcePartials clamped = source_partials(-1.0, m, p, NonlinearityMode::power_mean);
    EXPECT_EQ(clamped.d_pressure, 0.0);
}

TEST(MicroAverage, Constant) {
    const MicroGrid g = build_micro_grid(9, Edge::left);
    EXPECT_NEAR(micro_average(MicroField::Constant(81, 7.0), g), 7.0, 1e-14);
}

TEST(MicroAverage, LinearIsExact) {
    const MicroGrid g = build_micro_grid(65, Edge::left);
    MicroField v(g.size());
    for (int q = 0; q < g.size(); ++q) v[q] = g.y1(q);
    EXPECT_NEAR(micro_average(v, g), 0.5, 1e-12);
}

TEST(MicroAverage, QuadraticIsSecondOrder) {
    const MicroGrid g = build_micro_grid(65, Edge::left);
    MicroField v(g.size());
    for (int q = 0; q < g.size(); ++q) v[q] = g.y1(q) * g.y1(q);
    EXPECT_NEAR(micro_average(v, g), 1.0 / 3.0, 1e-3);
}

TEST(Lipschitz, LinearTestHasNoPressureDependence) {
    EXPECT_EQ(estimate_lipschitz_constant(unit_amplitude(), NonlinearityMode::linear_test, SampleBox{}), 0.0);
}

TEST(Lipschitz, SquareRootOnOneToFour) {
    SampleBox box;
    box.pressure_lo = 1.0;
    box.pressure_hi = 4.0;
    box.average_lo = box.average_hi = 1.0;
    box.average_samples = 1;
    const double c = estimate_lipschitz_constant(unit_amplitude(), NonlinearityMode::power_mean, box);
    EXPECT_NEAR(c, 0.5, 0.025);
}

TEST(Lipschitz, LinearInAmplitude) {
    ModelParams p = unit_amplitude();
    const double c1 = estimate_lipschitz_constant(p, NonlinearityMode::power_mean, SampleBox{});
    p.amplitude = 2.0;
    EXPECT_NEAR(estimate_lipschitz_constant(p, NonlinearityMode::power_mean, SampleBox{}), 2.0 * c1, 1e-12 * c1);
}

TEST(Assumptions, SmallAmplitudeIsAccepted) {
    ModelParams p = unit_amplitude();
    p.amplitude = 0.1;
    EXPECT_TRUE(validate_assumptions(p, MacroGrid(8, 1.0), NonlinearityMode::power_mean).ok());
}

TEST(Assumptions, ExponentsMustSumToOne) {
    ModelParams p = unit_amplitude();
    p.pressure_exponent = 0.7;
    p.density_exponent = 0.2;
    const AssumptionReport r = validate_assumptions(p, MacroGrid(8, 1.0), NonlinearityMode::power_mean);
    EXPECT_FALSE(r.ok());
    EXPECT_NE(r.failures().find("alpha+beta"), std::string::npos);
}

TEST(Assumptions, ContractionProductTwoGivesMarginMinusOne) {
    ModelParams p;
    const MacroGrid grid(8, 1.0);
    p.amplitude = suggest_amplitude(p, grid, NonlinearityMode::power_mean, SampleBox{}, 2.0);
    const AssumptionReport r = validate_assumptions(p, grid, NonlinearityMode::power_mean);
    EXPECT_FALSE(r.ok());
    EXPECT_NEAR(r.contraction_product, 2.0, 1e-12);
    bool found = false;
    for (const auto& c : r.checks) {
        if (c.name == "C*c_P<1") {
            found = true;
            EXPECT_FALSE(c.ok);
            EXPECT_NEAR(c.margin, -1.0, 1e-12);
        }
    }
    EXPECT_TRUE(found);
}

TEST(Assumptions, SuggestedAmplitudeHitsTarget) {
    const Problem p = test::reference_problem();
    const AssumptionReport r = validate_assumptions(p.params, p.geometry.macro, p.mode, p.box);
    EXPECT_TRUE(r.ok());
    EXPECT_NEAR(r.contraction_product, 0.5, 1e-12);
}

TEST(RobinCoefficientTest, AdmissibilityBox) {
    EXPECT_TRUE(RobinCoefficient::constant(4, 1.0).admissible(0.1, 10.0));
    EXPECT_FALSE(RobinCoefficient::constant(4, 0.05).admissible(0.1, 10.0));
    EXPECT_THROW(RobinCoefficient::constant(4, 11.0).require_admissible(0.1, 10.0), AdmissibilityError);
}

TEST(ModelProperties, SeparateHomogeneity) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    const ModelParams p = unit_amplitude();
    for (int s = 0; s < 100; ++s) {
        const double a = u(rng), m = u(rng), l = u(rng), mu = u(rng);
        const double lhs = source_value(l * a, mu * m, p, NonlinearityMode::power_mean);
        const double rhs = std::pow(l, p.pressure_exponent) * std::pow(mu, p.density_exponent) *
                           source_value(a, m, p, NonlinearityMode::power_mean);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs));
    }
}

TEST(ModelProperties, JointDegreeOneHomogeneity) {
    std::mt19937_64 rng(22);
    const Geometry g{MacroGrid(6, 1.0), build_micro_grid(5, Edge::left)};
    const ModelParams p = unit_amplitude();
    std::uniform_real_distribution<double> lam(0.1, 10.0);
    for (int s = 0; s < 100; ++s) {
        const MacroField pi = test::uniform_vector(rng, 6, 0.01, 2.0);
        const TwoScaleField rho = test::uniform_field(rng, g, 0.01, 2.0);
        const double l = lam(rng);
        const MacroField scaled = eval_f(l * pi, l * rho, g, p, NonlinearityMode::power_mean);
        const MacroField ref = l * eval_f(pi, rho, g, p, NonlinearityMode::power_mean);
        for (int i = 0; i < 6; ++i) EXPECT_NEAR(scaled[i], ref[i], 1e-12 * std::abs(ref[i]));
    }
}

TEST(ModelProperties, GrowthBound) {
    std::mt19937_64 rng(23);
    const Geometry g{MacroGrid(6, 1.0), build_micro_grid(5, Edge::left)};
    ModelParams p = unit_amplitude();
    p.amplitude = 1.7;
    for (int s = 0; s < 100; ++s) {
        const MacroField pi = test::uniform_vector(rng, 6, 0.0, 3.0);
        const TwoScaleField rho = test::uniform_field(rng, g, 0.0, 3.0);
        const double lhs = discrete_norm(eval_f(pi, rho, g, p, NonlinearityMode::power_mean), NormKind::l2_macro, g);
        const double avg = discrete_norm(micro_averages(rho, g.micro), NormKind::l2_macro, g);
        const double rhs = p.amplitude * std::pow(std::max(pi.maxCoeff(), p.clamp_floor), p.pressure_exponent) *
                           std::pow(avg + p.clamp_floor * std::sqrt(g.macro.length()), p.density_exponent);
        EXPECT_LE(lhs, rhs * (1.0 + 1e-12));
    }
}

}  // namespace
}  // namespace twoscale
