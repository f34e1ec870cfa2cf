#pragma once

#include "twoscale/fields.hpp"
#include "twoscale/grid.hpp"

namespace twoscale {

/// Discrete norms.  Every kind is trapezoid quadrature on each axis; the
/// micro gradient uses the finite-volume edge energy of MicroGrid::links().
enum class NormKind {
    l2_macro,
    l2_twoscale,
    h1y_seminorm,
    l2_trace_gamma_r,
    l2_trace_gamma_n,
    h1_macro_seminorm,
};

/// Macro kinds: l2_macro, h1_macro_seminorm.
double discrete_norm(const MacroField& field, NormKind kind, const Geometry& g);
/// Two-scale kinds: l2_twoscale, h1y_seminorm.
double discrete_norm(const TwoScaleField& field, NormKind kind, const Geometry& g);
/// Trace kinds: l2_trace_gamma_r, l2_trace_gamma_n (array from extract_trace).
double discrete_norm(const TraceArray& trace, NormKind kind, const Geometry& g);

TraceArray extract_trace(const TwoScaleField& rho, BoundaryPart which, const MicroGrid& grid);
/// Single cell restriction, ordered as MicroGrid::nodes(which).
Vector extract_trace(const MicroField& rho, BoundaryPart which, const MicroGrid& grid);

/// 1 / smallest eigenvalue of the discrete Dirichlet Laplacian on the grid.
double poincare_constant(const MacroGrid& grid);

// Squared building blocks, summed in fixed index order.
double micro_l2_squared(const MicroField& v, const MicroGrid& grid);
double micro_gradient_squared(const MicroField& v, const MicroGrid& grid);
double macro_l2_squared(const MacroField& u, const MacroGrid& grid);
double macro_gradient_squared(const MacroField& u, const MacroGrid& grid);
/// sum_x w_x (|v_x|^2_{L2(Y)} + |grad v_x|^2_{L2(Y)})
double twoscale_h1_squared(const TwoScaleField& v, const Geometry& g);
/// sum_x w_x |v_x|^2_{L2(Y)}
double twoscale_l2_squared(const TwoScaleField& v, const Geometry& g);
/// sum_x w_x sum_j sigma_j t(x, j)^2
double trace_l2_squared(const TraceArray& t, BoundaryPart part, const Geometry& g);

}  // namespace twoscale
