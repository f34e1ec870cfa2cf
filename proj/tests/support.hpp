#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "twoscale/coupled.hpp"
#include "twoscale/model.hpp"

namespace twoscale::test {

/// Omega = (0, 1) with n_x nodes, unit cell with n_y points per side, Robin
/// edge on the left, T = 0.2, dt = 0.01, alpha = beta = 1/2, k = 1 and c_f at
/// contraction product 1/2.
inline Problem reference_problem(int n_x = 8, int n_y = 9) {
    Problem p;
    p.geometry.macro = MacroGrid(n_x, 1.0);
    p.geometry.micro = build_micro_grid(n_y, Edge::left);
    p.params.amplitude = suggest_amplitude(p.params, p.geometry.macro, p.mode, p.box);
    p.k = RobinCoefficient::constant(n_y, 1.0);
    return p;
}

inline Vector uniform_vector(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

inline TwoScaleField uniform_field(std::mt19937_64& rng, const Geometry& g, double lo, double hi) {
    TwoScaleField f = TwoScaleField::zeros(g);
    for (int x = 0; x < g.macro.size(); ++x) f.micro(x) = uniform_vector(rng, g.micro.size(), lo, hi);
    return f;
}

/// Fresh empty directory below the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("twoscale_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace twoscale::test
