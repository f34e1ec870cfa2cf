#include "twoscale/macro.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/norms.hpp"

namespace twoscale {

MacroField solve_shifted_poisson(const MacroField& source, const Vector& shift, double coeff,
                                 const MacroGrid& grid) {
    const int n = grid.size();
    if (source.size() != n || shift.size() != n) throw ShapeError("macro source does not match grid");
    if (!(coeff > 0.0)) throw ConfigError("macro coefficient must be positive");

    const double off = -coeff / (grid.spacing() * grid.spacing());
    const int m = n - 2;
    // forward elimination on interior unknowns 1..n-2
    std::vector<double> c(m), d(m);
    for (int i = 0; i < m; ++i) {
        const double diag = -2.0 * off - shift[i + 1];
        const double denom = i == 0 ? diag : diag - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (source[i + 1] - (i == 0 ? 0.0 : off * d[i - 1])) / denom;
    }
    MacroField u = MacroField::Zero(n);
    for (int i = m - 1; i >= 0; --i) {
        u[i + 1] = d[i] - (i + 1 < m ? c[i] * u[i + 2] : 0.0);
    }
    return u;
}

MacroField solve_poisson(const MacroField& source, double coeff, const MacroGrid& grid) {
    return solve_shifted_poisson(source, Vector::Zero(grid.size()), coeff, grid);
}

EllipticSolution solve_elliptic_averages(const Vector& averages, const MacroGrid& grid,
                                         const ModelParams& p, NonlinearityMode mode,
                                         const MacroField& guess, const PicardOptions& options) {
    if (averages.size() != grid.size() || guess.size() != grid.size()) {
        throw ShapeError("solve_elliptic: fields do not match macro grid");
    }
    const double coeff = p.macro_coefficient();
    EllipticSolution out;
    MacroField pi = guess;
    for (int m = 1; m <= options.max_iterations; ++m) {
        MacroField next = solve_poisson(eval_f_from_averages(pi, averages, p, mode), coeff, grid);
        const double update = std::sqrt(macro_l2_squared(next - pi, grid));
        const double scale = std::max(std::sqrt(macro_l2_squared(pi, grid)), 1.0);
        pi = std::move(next);
        out.updates.push_back(update);
        out.iterations = m;
        if (update <= options.tolerance * scale) {
            out.pressure = std::move(pi);
            return out;
        }
    }
    std::ostringstream os;
    os << "macro Picard iteration did not converge in " << options.max_iterations
       << " iterations (last update " << out.updates.back() << ")";
    throw FixedPointError(os.str(), out.updates.back(), out.iterations);
}

EllipticSolution solve_elliptic(const TwoScaleField& rho, const Geometry& g, const ModelParams& p,
                                NonlinearityMode mode, const MacroField& guess,
                                const PicardOptions& options) {
    if (!rho.matches(g)) throw ShapeError("solve_elliptic: density does not match grids");
    return solve_elliptic_averages(micro_averages(rho, g.micro), g.macro, p, mode, guess, options);
}

MacroField initial_pressure(const TwoScaleField& rho_initial, const Geometry& g,
                            const ModelParams& p, NonlinearityMode mode,
                            const PicardOptions& options) {
    if (!rho_initial.matrix().allFinite()) throw ConfigError("initial density is not finite");
    return solve_elliptic(rho_initial, g, p, mode, MacroField::Zero(g.macro.size()), options).pressure;
}

}  // namespace twoscale
