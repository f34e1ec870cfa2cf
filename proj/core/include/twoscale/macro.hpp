#pragma once

#include <vector>

#include "twoscale/fields.hpp"
#include "twoscale/grid.hpp"
#include "twoscale/model.hpp"

namespace twoscale {

/// u with -coeff * (u_{i-1} - 2u_i + u_{i+1}) / h^2 = source_i at interior
/// nodes and u = 0 at both ends (Thomas algorithm).
MacroField solve_poisson(const MacroField& source, double coeff, const MacroGrid& grid);

/// Same stencil with a zeroth-order term: -coeff Delta_h u - shift .* u = source.
/// The shifted matrix must stay positive definite.
MacroField solve_shifted_poisson(const MacroField& source, const Vector& shift, double coeff,
                                 const MacroGrid& grid);

struct PicardOptions {
    double tolerance = 1e-10;
    int max_iterations = 200;
};

struct EllipticSolution {
    MacroField pressure;
    int iterations = 0;
    /// ||pi^{m+1} - pi^m|| in the macro L2 norm, one entry per iteration.
    std::vector<double> updates;
};

/// -A rho_F pi'' = f(pi, rho) by Picard iteration
/// pi^{m+1} = solve_poisson(f(pi^m, rho)), stopping once the update is below
/// tolerance * max(||pi^m||, 1).  Throws FixedPointError on the iteration cap.
EllipticSolution solve_elliptic(const TwoScaleField& rho, const Geometry& g, const ModelParams& p,
                                NonlinearityMode mode, const MacroField& guess,
                                const PicardOptions& options = {});

/// Variant taking the cell averages directly.
EllipticSolution solve_elliptic_averages(const Vector& averages, const MacroGrid& grid,
                                         const ModelParams& p, NonlinearityMode mode,
                                         const MacroField& guess, const PicardOptions& options = {});

/// Pressure slaved to the initial density (Picard from a zero guess).
MacroField initial_pressure(const TwoScaleField& rho_initial, const Geometry& g,
                            const ModelParams& p, NonlinearityMode mode,
                            const PicardOptions& options = {});

}  // namespace twoscale
