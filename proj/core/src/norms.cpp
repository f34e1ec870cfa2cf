#include "twoscale/norms.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "twoscale/errors.hpp"

namespace twoscale {

namespace {

void require_macro(const MacroField& u, const MacroGrid& grid) {
    if (u.size() != grid.size()) {
        throw ShapeError("macro field has " + std::to_string(u.size()) + " values, grid has " +
                         std::to_string(grid.size()) + " nodes");
    }
}

void require_micro(const MicroField& v, const MicroGrid& grid) {
    if (v.size() != grid.size()) {
        throw ShapeError("micro field has " + std::to_string(v.size()) + " values, grid has " +
                         std::to_string(grid.size()) + " nodes");
    }
}

void require_twoscale(const TwoScaleField& f, const Geometry& g) {
    if (!f.matches(g)) {
        throw ShapeError("two-scale field shape (" + std::to_string(f.micro_size()) + " x " +
                         std::to_string(f.macro_size()) + ") does not match grids");
    }
}

}  // namespace

double micro_l2_squared(const MicroField& v, const MicroGrid& grid) {
    require_micro(v, grid);
    const auto w = grid.cell_weights();
    double sum = 0.0;
    for (int p = 0; p < grid.size(); ++p) sum += w[p] * v[p] * v[p];
    return sum;
}

double micro_gradient_squared(const MicroField& v, const MicroGrid& grid) {
    require_micro(v, grid);
    // face length (factor*h) times squared difference quotient times h
    double sum = 0.0;
    for (const auto& link : grid.links()) {
        const double d = v[link.b] - v[link.a];
        sum += link.factor * d * d;
    }
    return sum;
}

double macro_l2_squared(const MacroField& u, const MacroGrid& grid) {
    require_macro(u, grid);
    const auto w = grid.weights();
    double sum = 0.0;
    for (int i = 0; i < grid.size(); ++i) sum += w[i] * u[i] * u[i];
    return sum;
}

double macro_gradient_squared(const MacroField& u, const MacroGrid& grid) {
    require_macro(u, grid);
    double sum = 0.0;
    for (int i = 0; i + 1 < grid.size(); ++i) {
        const double d = u[i + 1] - u[i];
        sum += d * d;
    }
    return sum / grid.spacing();
}

double twoscale_l2_squared(const TwoScaleField& v, const Geometry& g) {
    require_twoscale(v, g);
    const auto w = g.macro.weights();
    double sum = 0.0;
    for (int x = 0; x < v.macro_size(); ++x) sum += w[x] * micro_l2_squared(v.micro(x), g.micro);
    return sum;
}

double twoscale_h1_squared(const TwoScaleField& v, const Geometry& g) {
    require_twoscale(v, g);
    const auto w = g.macro.weights();
    double sum = 0.0;
    for (int x = 0; x < v.macro_size(); ++x) {
        const MicroField col = v.micro(x);
        sum += w[x] * (micro_l2_squared(col, g.micro) + micro_gradient_squared(col, g.micro));
    }
    return sum;
}

double trace_l2_squared(const TraceArray& t, BoundaryPart part, const Geometry& g) {
    const auto sigma = g.micro.weights(part);
    if (t.rows() != g.macro.size() || t.cols() != static_cast<Eigen::Index>(sigma.size())) {
        throw ShapeError("trace array shape does not match grids");
    }
    const auto w = g.macro.weights();
    double sum = 0.0;
    for (int x = 0; x < t.rows(); ++x) {
        double inner = 0.0;
        for (int j = 0; j < t.cols(); ++j) inner += sigma[j] * t(x, j) * t(x, j);
        sum += w[x] * inner;
    }
    return sum;
}

double discrete_norm(const MacroField& field, NormKind kind, const Geometry& g) {
    switch (kind) {
        case NormKind::l2_macro: return std::sqrt(macro_l2_squared(field, g.macro));
        case NormKind::h1_macro_seminorm: return std::sqrt(macro_gradient_squared(field, g.macro));
        default: throw ShapeError("norm kind does not apply to a macro field");
    }
}

double discrete_norm(const TwoScaleField& field, NormKind kind, const Geometry& g) {
    require_twoscale(field, g);
    const auto w = g.macro.weights();
    switch (kind) {
        case NormKind::l2_twoscale: return std::sqrt(twoscale_l2_squared(field, g));
        case NormKind::h1y_seminorm: {
            double sum = 0.0;
            for (int x = 0; x < field.macro_size(); ++x) {
                sum += w[x] * micro_gradient_squared(field.micro(x), g.micro);
            }
            return std::sqrt(sum);
        }
        default: throw ShapeError("norm kind does not apply to a two-scale field");
    }
}

double discrete_norm(const TraceArray& trace, NormKind kind, const Geometry& g) {
    switch (kind) {
        case NormKind::l2_trace_gamma_r:
            return std::sqrt(trace_l2_squared(trace, BoundaryPart::gamma_r, g));
        case NormKind::l2_trace_gamma_n:
            return std::sqrt(trace_l2_squared(trace, BoundaryPart::gamma_n, g));
        default: throw ShapeError("norm kind does not apply to a trace array");
    }
}

Vector extract_trace(const MicroField& rho, BoundaryPart which, const MicroGrid& grid) {
    require_micro(rho, grid);
    const auto nodes = grid.nodes(which);
    Vector out(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t j = 0; j < nodes.size(); ++j) out[static_cast<Eigen::Index>(j)] = rho[nodes[j]];
    return out;
}

TraceArray extract_trace(const TwoScaleField& rho, BoundaryPart which, const MicroGrid& grid) {
    if (rho.micro_size() != grid.size()) throw ShapeError("two-scale field does not match micro grid");
    const auto nodes = grid.nodes(which);
    TraceArray out(rho.macro_size(), static_cast<Eigen::Index>(nodes.size()));
    for (int x = 0; x < rho.macro_size(); ++x) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            out(x, static_cast<Eigen::Index>(j)) = rho.matrix()(nodes[j], x);
        }
    }
    return out;
}

double poincare_constant(const MacroGrid& grid) {
    const int interior = grid.size() - 2;
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    Vector diag = Vector::Constant(interior, 2.0 * inv_h2);
    if (interior == 1) return 1.0 / diag[0];
    Vector sub = Vector::Constant(interior - 1, -inv_h2);
    Eigen::SelfAdjointEigenSolver<Matrix> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    return 1.0 / solver.eigenvalues().minCoeff();
}

}  // namespace twoscale
