#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "support.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/macro.hpp"
#include "twoscale/norms.hpp"

namespace twoscale {
namespace {

using std::numbers::pi;

TEST(Poisson, ZeroSource) {
    const MacroGrid g(9, 1.0);
    EXPECT_TRUE((solve_poisson(MacroField::Zero(9), 1.0, g).array() == 0.0).all());
}

TEST(Poisson, ExactForQuadratic) {
    const MacroGrid g(11, 1.0);
    const MacroField u = solve_poisson(MacroField::Ones(11), 1.0, g);
    for (int i = 0; i < 11; ++i) {
        const double x = g.coordinate(i);
        EXPECT_NEAR(u[i], 0.5 * x * (1.0 - x), 1e-15);
    }
}

TEST(Poisson, ManufacturedSine) {
    const MacroGrid g(257, 1.0);
    MacroField src(257), exact(257);
    for (int i = 0; i < 257; ++i) {
        exact[i] = std::sin(pi * g.coordinate(i));
        src[i] = pi * pi * exact[i];
    }
    EXPECT_LE((solve_poisson(src, 1.0, g) - exact).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Poisson, ShiftedMatchesDenseSolve) {
    std::mt19937_64 rng(41);
    const int n = 12;
    const MacroGrid g(n, 2.0);
    const MacroField src = test::uniform_vector(rng, n, -1.0, 1.0);
    const Vector shift = test::uniform_vector(rng, n, -1.0, 1.0);
    const double coeff = 0.7, h = g.spacing();
    Matrix a = Matrix::Zero(n - 2, n - 2);
    for (int i = 0; i < n - 2; ++i) {
        a(i, i) = 2.0 * coeff / (h * h) - shift[i + 1];
        if (i > 0) a(i, i - 1) = -coeff / (h * h);
        if (i + 1 < n - 2) a(i, i + 1) = -coeff / (h * h);
    }
    const Vector inner = a.lu().solve(src.segment(1, n - 2));
    const MacroField u = solve_shifted_poisson(src, shift, coeff, g);
    EXPECT_EQ(u[0], 0.0);
    EXPECT_EQ(u[n - 1], 0.0);
    EXPECT_LE((u.segment(1, n - 2) - inner).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Elliptic, ZeroDensityWithoutClamp) {
    Problem p = test::reference_problem();
    p.params.clamp_floor = 0.0;
    const auto sol = solve_elliptic(TwoScaleField::zeros(p.geometry), p.geometry, p.params, p.mode,
                                    MacroField::Zero(8));
    EXPECT_TRUE((sol.pressure.array() == 0.0).all());
}

TEST(Elliptic, LinearTestReducesToPoisson) {
    Problem p = test::reference_problem(11);
    p.params.amplitude = 1.0;
    const auto sol = solve_elliptic(TwoScaleField(11, 81, 1.0), p.geometry, p.params, NonlinearityMode::linear_test,
                                    MacroField::Zero(11));
    for (int i = 0; i < 11; ++i) {
        const double x = p.geometry.macro.coordinate(i);
        EXPECT_NEAR(sol.pressure[i], 0.5 * x * (1.0 - x), 1e-14);
    }
}

TEST(Elliptic, GuessIndependence) {
    const Problem p = test::reference_problem();
    const TwoScaleField rho(8, 81, 0.6);
    const double tol = PicardOptions{}.tolerance;
    const auto a = solve_elliptic(rho, p.geometry, p.params, p.mode, MacroField::Zero(8));
    const auto b = solve_elliptic(rho, p.geometry, p.params, p.mode, MacroField::Constant(8, 10.0));
    EXPECT_LE((a.pressure - b.pressure).cwiseAbs().maxCoeff(), 10.0 * tol);
}

TEST(Elliptic, FiveRandomGuessesAgree) {
    std::mt19937_64 rng(42);
    const Problem p = test::reference_problem();
    const TwoScaleField rho = test::uniform_field(rng, p.geometry, 0.2, 1.0);
    const double tol = PicardOptions{}.tolerance;
    std::vector<MacroField> sols;
    for (int s = 0; s < 5; ++s) {
        const MacroField guess = test::uniform_vector(rng, 8, -5.0, 5.0);
        sols.push_back(solve_elliptic(rho, p.geometry, p.params, p.mode, guess).pressure);
    }
    for (int i = 0; i < 5; ++i) {
        for (int j = i + 1; j < 5; ++j) EXPECT_LE((sols[i] - sols[j]).cwiseAbs().maxCoeff(), 10.0 * tol);
    }
}

TEST(Elliptic, IterationCapThrows) {
    const Problem p = test::reference_problem();
    PicardOptions opts;
    opts.max_iterations = 1;
    EXPECT_THROW(solve_elliptic(TwoScaleField(8, 81, 0.6), p.geometry, p.params, p.mode, MacroField::Zero(8), opts),
                 FixedPointError);
}

TEST(Elliptic, ContractionRate) {
    const Problem p = test::reference_problem();
    const AssumptionReport r = validate_assumptions(p.params, p.geometry.macro, p.mode, p.box);
    const auto sol = solve_elliptic(TwoScaleField(8, 81, 0.6), p.geometry, p.params, p.mode, MacroField::Zero(8));
    ASSERT_GE(sol.updates.size(), 12u);
    // Leaving pi = 0 the clamped square root is steep and early updates grow;
    // the last ten ratios are in the asymptotic regime.
    for (std::size_t m = sol.updates.size() - 10; m < sol.updates.size(); ++m) {
        EXPECT_LE(sol.updates[m] / sol.updates[m - 1], r.contraction_product + 0.1);
    }
}

TEST(Elliptic, DegreeOneScalingOfData) {
    std::mt19937_64 rng(43);
    const Problem p = test::reference_problem();
    const Vector avg = test::uniform_vector(rng, 8, 0.2, 1.0);
    const double tol = PicardOptions{}.tolerance;
    for (double lambda : {0.5, 2.0, 10.0}) {
        const auto base = solve_elliptic_averages(avg, p.geometry.macro, p.params, p.mode, MacroField::Zero(8));
        const auto scaled =
            solve_elliptic_averages(lambda * avg, p.geometry.macro, p.params, p.mode, MacroField::Zero(8));
        EXPECT_LE((scaled.pressure - lambda * base.pressure).cwiseAbs().maxCoeff(), 10.0 * tol * std::max(lambda, 1.0));
    }
}

TEST(InitialPressure, ZeroDensity) {
    Problem p = test::reference_problem();
    p.params.clamp_floor = 0.0;
    EXPECT_TRUE((initial_pressure(TwoScaleField::zeros(p.geometry), p.geometry, p.params, p.mode).array() == 0.0).all());
}

TEST(InitialPressure, ScalesWithData) {
    std::mt19937_64 rng(44);
    Problem p = test::reference_problem();
    const TwoScaleField rho = test::uniform_field(rng, p.geometry, 0.2, 1.0);
    const MacroField base = initial_pressure(rho, p.geometry, p.params, p.mode);
    ModelParams scaled = p.params;
    scaled.ambient_pressure *= 3.0;
    const MacroField tripled = initial_pressure(3.0 * rho, p.geometry, scaled, p.mode);
    EXPECT_LE((tripled - 3.0 * base).cwiseAbs().maxCoeff(), 30.0 * PicardOptions{}.tolerance);
}

TEST(InitialPressure, LinearTest) {
    Problem p = test::reference_problem(9);
    p.params.amplitude = 1.0;
    const MacroField u = initial_pressure(TwoScaleField(9, 81, 1.0), p.geometry, p.params, NonlinearityMode::linear_test);
    for (int i = 0; i < 9; ++i) {
        const double x = p.geometry.macro.coordinate(i);
        EXPECT_NEAR(u[i], 0.5 * x * (1.0 - x), 1e-14);
    }
}

}  // namespace
}  // namespace twoscale
