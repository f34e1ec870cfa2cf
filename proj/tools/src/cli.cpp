#include "twoscale_cli/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "twoscale/errors.hpp"
#include "twoscale/harness.hpp"
#include "twoscale/inverse.hpp"
#include "twoscale/sensitivity.hpp"
#include "twoscale_cli/config.hpp"
#include "twoscale_cli/io.hpp"

namespace twoscale::cli {

namespace {

using nlohmann::json;

struct Options {
    std::string config;
    std::string out;
    int workers = 1;
    std::optional<std::uint64_t> seed;
    std::vector<double> lambdas;
    double noise = 0.0;
    std::string meas;
    std::string k0;
    std::optional<double> gamma;
};

struct Check {
    std::string name;
    double value;
    std::string limit;
    bool pass;
};

class Table {
public:
    void add(std::string name, double value, std::string limit, bool pass) {
        checks_.push_back({std::move(name), value, std::move(limit), pass});
    }
    bool ok() const {
        for (const auto& c : checks_) {
            if (!c.pass) return false;
        }
        return true;
    }
    void print(std::ostream& os) const {
        os << std::left << std::setw(36) << "check" << std::setw(16) << "value" << std::setw(18) << "limit"
           << "result\n";
        for (const auto& c : checks_) {
            std::ostringstream v;
            v << std::setprecision(6) << c.value;
            os << std::left << std::setw(36) << c.name << std::setw(16) << v.str() << std::setw(18) << c.limit
               << (c.pass ? "PASS" : "FAIL") << '\n';
        }
    }
    json to_json() const {
        json rows = json::array();
        for (const auto& c : checks_) {
            rows.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
        }
        return rows;
    }

private:
    std::vector<Check> checks_;
};

struct Context {
    SolverConfig config;
    Problem problem;
    std::filesystem::path dir;
    std::uint64_t seed;
    int workers;
    std::string command;
};

Context load(const Options& o, const std::string& command) {
    SolverConfig config = parse_config(o.config);
    Context ctx{config, make_problem(config), {}, 0, std::max(o.workers, 1), command};
    ctx.problem.options.workers = ctx.workers;
    ctx.dir = o.out.empty() ? std::filesystem::path(ctx.config.output_dir) : std::filesystem::path(o.out);
    ctx.seed = o.seed.value_or(ctx.config.seed);
    return ctx;
}

void write_manifest(const Context& ctx, const std::vector<std::string>& files, const json& extra = json::object()) {
    json echo = to_json(ctx.config);
    echo["seed"] = ctx.seed;
    write_json(make_manifest(ctx.command, echo, ctx.dir, files, extra), ctx.dir / "manifest.json");
}

int finish_verify(const Context& ctx, const Table& table, json details, std::ostream& out) {
    table.print(out);
    json report = {{"command", ctx.command}, {"checks", table.to_json()}, {"pass", table.ok()}};
    for (auto& [key, value] : details.items()) report[key] = value;
    const std::string name = ctx.command + ".json";
    write_json(report, ctx.dir / name);
    write_manifest(ctx, {name});
    out << (table.ok() ? "all checks passed" : "some checks FAILED") << '\n';
    return table.ok() ? 0 : 1;
}

std::string limit(const char* op, double v) {
    std::ostringstream os;
    os << op << ' ' << v;
    return os.str();
}

int cmd_solve(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "solve");
    const Trajectory traj = run_simulation(ctx.problem);
    const int nn = static_cast<int>(ctx.problem.geometry.micro.nodes(BoundaryPart::gamma_n).size());
    write_pressure_csv(traj, ctx.dir / "pressure.csv");
    write_density_csv(traj, ctx.dir / "density.csv");
    write_trace_csv(traj, nn, ctx.dir / "trace.csv");
    json extra = {{"steps_completed", traj.steps()},
                  {"coupling_iterations", traj.coupling_iterations},
                  {"params_digest", traj.params_digest}};
    if (!traj.complete()) extra["error"] = traj.failure_message();
    write_manifest(ctx, {"pressure.csv", "density.csv", "trace.csv"}, extra);
    out << "steps " << traj.steps() << " of " << ctx.problem.params.step_count() << ", output in " << ctx.dir.string()
        << '\n';
    if (!traj.complete()) {
        out << "error: " << traj.failure_message() << '\n';
        return 1;
    }
    return 0;
}

int cmd_measure(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "measure");
    const Trajectory traj = run_simulation(ctx.problem);
    MeasurementSet meas = measure(ctx.problem, traj);
    if (o.noise > 0.0) add_noise(meas, o.noise, ctx.seed, ctx.problem.geometry);
    write_measurement(meas, ctx.dir / "measurement.json");
    write_manifest(ctx, {"measurement.json"}, {{"noise", o.noise}});
    out << "wrote " << meas.values.size() << " samples (noise " << o.noise << ") to "
        << (ctx.dir / "measurement.json").string() << '\n';
    return 0;
}

int cmd_invert(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "invert");
    if (o.meas.empty()) throw ConfigError("invert needs -m/--meas");
    const MeasurementSet meas = read_measurement(o.meas);
    const int nr = ctx.problem.k.size();
    const Vector k0 = o.k0.empty() ? ctx.problem.k.values() : read_coefficient(o.k0, nr);
    IdentificationOptions opts;
    if (o.gamma) opts.gamma = *o.gamma;
    opts.tol_g = ctx.config.tol_g;
    opts.max_iter = ctx.config.max_iter;
    opts.workers = ctx.workers;
    const IdentificationResult r = identify(ctx.problem, meas, k0, opts);

    json report = {{"k", std::vector<double>(r.k.values().begin(), r.k.values().end())},
                   {"iterations", r.iterations},
                   {"termination", to_string(r.reason)},
                   {"objective_history", r.objective_history},
                   {"gradient_history", r.gradient_history},
                   {"misfit_history", r.misfit_history},
                   {"gamma", opts.gamma}};
    if (!std::isnan(r.relative_error)) report["relative_error"] = r.relative_error;
    write_json(report, ctx.dir / "identification.json");
    write_manifest(ctx, {"identification.json"}, {{"measurement", meas.provenance}});
    out << "iterations " << r.iterations << ", termination " << to_string(r.reason) << '\n';
    if (!std::isnan(r.relative_error)) out << "relative k-error " << r.relative_error << '\n';
    return 0;
}

int cmd_verify_scaling(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "verify-scaling");
    const std::vector<double> lambdas = o.lambdas.empty() ? std::vector<double>{0.5, 2.0, 10.0} : o.lambdas;
    Table table;
    json rows = json::array();
    for (const double lambda : lambdas) {
        const ScalingReport r = scaling_check(ctx.problem, lambda);
        std::ostringstream name;
        name << "scaling lambda=" << lambda;
        table.add(name.str(), r.max_rel_dev, limit("<=", 1e-8), r.max_rel_dev <= 1e-8);
        rows.push_back({{"lambda", lambda}, {"max_rel_dev", r.max_rel_dev}, {"pressure_dev", r.pressure_dev},
                        {"density_dev", r.density_dev}});
    }
    return finish_verify(ctx, table, {{"runs", rows}}, out);
}

int cmd_verify_frechet(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "verify-frechet");
    const int nr = ctx.problem.k.size();
    std::mt19937_64 rng(ctx.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::vector<double> eps = {1e-2, 5e-3, 2.5e-3};
    Table table;
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        Vector d(nr);
        for (int j = 0; j < nr; ++j) d[j] = normal(rng);
        d /= d.cwiseAbs().maxCoeff();
        const FrechetReport r = frechet_check(ctx.problem, d, eps);
        table.add("taylor ratio, direction " + std::to_string(i), r.max_ratio, limit("<=", 0.6), r.max_ratio <= 0.6);
        json rem = json::array();
        for (const auto& row : r.rows) rem.push_back({{"epsilon", row.epsilon}, {"r", row.remainder}, {"ratio", row.ratio}});
        rows.push_back({{"direction", std::vector<double>(d.begin(), d.end())},
                        {"remainders", rem},
                        {"observed_order", r.observed_order}});
    }
    return finish_verify(ctx, table, {{"directions", rows}}, out);
}

int cmd_verify_energy(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "verify-energy");
    Problem base = ctx.problem;
    base.initial = InitialCondition{};  // replaced by the family's own data
    const EnergyReport coarse = energy_family(base);
    const EnergyReport fine = energy_family(refine_problem(base));
    const double change = fine.constant / coarse.constant - 1.0;
    Table table;
    table.add("energy constant (coarse)", coarse.constant, "> 0", coarse.constant > 0.0);
    table.add("relative change under refinement", std::abs(change), limit("<=", 0.2), std::abs(change) <= 0.2);
    json runs = json::array();
    for (std::size_t i = 0; i < coarse.runs.size(); ++i) {
        runs.push_back({{"label", coarse.runs[i].label}, {"ratio", coarse.runs[i].ratio}, {"ratio_refined", fine.runs[i].ratio}});
    }
    return finish_verify(ctx, table, {{"runs", runs}, {"constant", coarse.constant}, {"constant_refined", fine.constant}}, out);
}

int cmd_verify_stability(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "verify-stability");
    const Problem& p = ctx.problem;
    Table table;

    const DataStabilityReport coarse = data_stability_sweep(p);
    const DataStabilityReport fine = data_stability_sweep(refine_problem(p));
    const double change = fine.constant / coarse.constant - 1.0;
    table.add("data stability constant", coarse.constant, "> 0", coarse.constant > 0.0);
    table.add("data constant change (refined)", std::abs(change), limit("<=", 0.3), std::abs(change) <= 0.3);

    const Trajectory base = run_simulation(p);
    base.require_complete();
    const Matrix jac = SensitivitySolver(p, base).trace_jacobian(ctx.workers);
    const double sigma_hat =
        weighted_min_singular_value(jac, trace_weights(p.geometry, p.params.time_step, base.steps()), p.geometry);
    const double a = 0.05;
    const StabilityScanReport scan = stability_scan(p, p.k.values(), a, 10, ctx.seed, ctx.workers);
    const StabilityScanReport small = stability_scan(p, p.k.values(), a / 4.0, 10, ctx.seed, ctx.workers);
    const double shrink = std::abs(small.c_hat / scan.c_hat - 1.0);
    table.add("c_hat (a=0.05)", scan.c_hat, "> 0", scan.c_hat > 0.0);
    table.add("c_hat / sigma_hat", scan.c_hat / sigma_hat, limit(">=", 0.5), scan.c_hat >= 0.5 * sigma_hat);
    table.add("c_hat change for a/4", shrink, limit("<", 0.5), shrink < 0.5);

    json data = json::array();
    for (std::size_t i = 0; i < coarse.runs.size(); ++i) {
        const auto& r = coarse.runs[i];
        data.push_back({{"parameter", r.parameter}, {"magnitude", r.magnitude}, {"ratio", r.ratio},
                        {"ratio_refined", fine.runs[i].ratio}});
    }
    json pairs = json::array();
    for (const auto& pair : scan.pairs) {
        pairs.push_back({{"data_distance", pair.data_distance}, {"coefficient_distance", pair.coefficient_distance},
                         {"ratio", pair.ratio}, {"degenerate", pair.degenerate}});
    }
    return finish_verify(ctx, table,
                         {{"data_sweep", data}, {"data_constant", coarse.constant}, {"data_constant_refined", fine.constant},
                          {"scan", {{"radius", a}, {"c_hat", scan.c_hat}, {"c_hat_quarter_radius", small.c_hat},
                                    {"sigma_hat", sigma_hat}, {"pairs", pairs}}}},
                         out);
}

int cmd_verify_neumann(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "verify-neumann-map");
    const Trajectory base = run_simulation(ctx.problem);
    base.require_complete();
    const NeumannMap map = assemble_neumann_map(ctx.problem, base, ctx.workers);
    Table table;
    table.add("sigma_min", map.sigma_min(), "> 0", map.sigma_min() > 0.0);
    if (!map.warning.empty()) out << "warning: " << map.warning << '\n';
    return finish_verify(ctx, table,
                         {{"singular_values", std::vector<double>(map.singular_values.begin(), map.singular_values.end())},
                          {"min_boundary_density", map.min_boundary_density},
                          {"c0_threshold", map.c0_threshold},
                          {"warning", map.warning}},
                         out);
}

int cmd_verify_assumptions(const Options& o, std::ostream& out) {
    const Context ctx = load(o, "verify-assumptions");
    const AssumptionReport& r = ctx.config.assumptions;
    Table table;
    json details = json::array();
    for (const auto& c : r.checks) {
        table.add(c.name, c.margin, "margin", c.ok);
        details.push_back({{"name", c.name}, {"detail", c.detail}});
    }
    return finish_verify(ctx, table,
                         {{"details", details},
                          {"lipschitz_estimate", r.lipschitz_estimate},
                          {"poincare", r.poincare},
                          {"contraction_product", r.contraction_product},
                          {"c_f", ctx.config.params.amplitude}},
                         out);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-scale gas transport solver and Robin coefficient identification"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config, "JSON config file")->required();
        sub->add_option("-o,--out", o.out, "output directory (default: config output_dir)");
        sub->add_option("-j,--workers", o.workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "seed for noise, random directions and scans");
    };
    struct Entry {
        const char* name;
        const char* help;
        int (*fn)(const Options&, std::ostream&);
    };
    const Entry entries[] = {
        {"solve", "run the forward simulation and write CSV output", cmd_solve},
        {"measure", "write Gamma_N traces as a measurement file", cmd_measure},
        {"invert", "identify k from a measurement file", cmd_invert},
        {"verify-scaling", "degree-one homogeneity check", cmd_verify_scaling},
        {"verify-frechet", "Taylor remainder check of the sensitivity", cmd_verify_frechet},
        {"verify-energy", "energy bound over a data family", cmd_verify_energy},
        {"verify-stability", "data stability sweep and local inverse stability scan", cmd_verify_stability},
        {"verify-neumann-map", "singular values of the discrete flux operator", cmd_verify_neumann},
        {"verify-assumptions", "print the model assumption report", cmd_verify_assumptions},
    };
    std::vector<std::pair<CLI::App*, const Entry*>> subs;
    for (const Entry& e : entries) {
        CLI::App* sub = app.add_subcommand(e.name, e.help);
        common(sub);
        subs.emplace_back(sub, &e);
    }
    app.get_subcommand("verify-scaling")->add_option("--lambda", o.lambdas, "scaling factors (default 0.5 2 10)");
    app.get_subcommand("measure")->add_option("--noise", o.noise, "relative Gaussian noise level")->check(CLI::NonNegativeNumber);
    CLI::App* inv = app.get_subcommand("invert");
    inv->add_option("-m,--meas", o.meas, "measurement file")->required();
    inv->add_option("--k0", o.k0, "initial coefficient: a number or a JSON file");
    inv->add_option("--gamma", o.gamma, "Tikhonov weight")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    for (const auto& [sub, entry] : subs) {
        if (!sub->parsed()) continue;
        try {
            return entry->fn(o, out);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << '\n';
            return 2;
        } catch (const ShapeError& e) {
            err << "shape error: " << e.what() << '\n';
            return 2;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }
    err << app.help();
    return 2;
}

}  // namespace twoscale::cli
