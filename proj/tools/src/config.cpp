#include "twoscale_cli/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "twoscale/errors.hpp"

namespace twoscale::cli {

namespace {

using nlohmann::json;

const std::set<std::string> top_level_keys = {
    "n_x",     "n_y",       "L_x",      "robin_side", "A",          "D",          "rho_F",   "p_F",
    "R",       "T",         "dt",       "alpha",      "beta",       "c_f",        "eps_reg", "k_min",
    "k_max",   "mode",      "tol_lin",  "max_lin",    "tol_picard", "max_picard", "tol_couple",
    "max_couple", "relax",  "tol_g",    "max_iter",   "initial",    "k",          "box",     "seed",
    "output_dir", "allow_invalid",
};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError("unknown key \"" + where + key + "\"");
    }
}

double number(const json& doc, const std::string& key, double fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number()) throw ConfigError("key \"" + key + "\" must be a number");
    return v.get<double>();
}

int integer(const json& doc, const std::string& key, int fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_number_integer()) throw ConfigError("key \"" + key + "\" must be an integer");
    return v.get<int>();
}

std::string text(const json& doc, const std::string& key, const std::string& fallback) {
    if (!doc.contains(key)) return fallback;
    const json& v = doc.at(key);
    if (!v.is_string()) throw ConfigError("key \"" + key + "\" must be a string");
    return v.get<std::string>();
}

json read_json_file(const std::filesystem::path& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw ConfigError(what + ": cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": malformed JSON in " + path.string() + ": " + e.what());
    }
}

Vector to_vector(const json& arr, const std::string& what) {
    if (!arr.is_array()) throw ConfigError(what + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ConfigError(what + " must be an array of numbers");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
    const std::filesystem::path p(file);
    return p.is_absolute() || base.empty() ? p : base / p;
}

void parse_initial(const json& doc, const std::filesystem::path& base, SolverConfig& c) {
    if (!doc.contains("initial")) return;
    const json& ini = doc.at("initial");
    if (!ini.is_object()) throw ConfigError("key \"initial\" must be an object");
    const std::string preset = text(ini, "preset", "cosines");
    if (preset == "constant") {
        reject_unknown(ini, {"preset", "value"}, "initial.");
        c.initial.kind = InitialCondition::Kind::constant;
        c.initial.value = number(ini, "value", 0.5);
    } else if (preset == "cosines") {
        reject_unknown(ini, {"preset", "mean", "amplitude"}, "initial.");
        c.initial.kind = InitialCondition::Kind::cosines;
        c.initial.mean = number(ini, "mean", 0.5);
        c.initial.amplitude = number(ini, "amplitude", 0.25);
    } else if (preset == "equilibrium") {
        reject_unknown(ini, {"preset"}, "initial.");
        c.initial.kind = InitialCondition::Kind::equilibrium;
    } else if (preset == "file" || preset == "nodal") {
        reject_unknown(ini, {"preset", "path", "values"}, "initial.");
        json values;
        if (ini.contains("values")) {
            values = ini.at("values");
        } else if (ini.contains("path")) {
            c.initial_file = text(ini, "path", "");
            values = read_json_file(resolve(base, c.initial_file), "initial.path");
        } else {
            throw ConfigError("key \"initial\": preset \"" + preset + "\" needs \"path\" or \"values\"");
        }
        if (!values.is_array()) throw ConfigError("initial density must be an array of per-macro-node arrays");
        const int micro = c.n_y * c.n_y;
        if (static_cast<int>(values.size()) != c.n_x) {
            throw ConfigError("initial density needs " + std::to_string(c.n_x) + " macro entries");
        }
        c.initial.kind = InitialCondition::Kind::nodal;
        c.initial.nodal.resize(micro, c.n_x);
        for (int x = 0; x < c.n_x; ++x) {
            const Vector col = to_vector(values[static_cast<std::size_t>(x)], "initial density");
            if (col.size() != micro) {
                throw ConfigError("initial density needs " + std::to_string(micro) + " micro values per macro node");
            }
            c.initial.nodal.col(x) = col;
        }
        if (!c.initial.nodal.allFinite()) throw ConfigError("initial density is not finite");
    } else {
        throw ConfigError("key \"initial.preset\": unknown preset \"" + preset + "\"");
    }
}

void parse_k(const json& doc, const std::filesystem::path& base, SolverConfig& c) {
    const int n = c.n_y;
    if (!doc.contains("k")) {
        c.k = RobinCoefficient::constant(n, 1.0);
        return;
    }
    const json& k = doc.at("k");
    Vector values;
    if (k.is_number()) {
        values = Vector::Constant(n, k.get<double>());
    } else if (k.is_array()) {
        values = to_vector(k, "key \"k\"");
    } else if (k.is_object()) {
        reject_unknown(k, {"file"}, "k.");
        c.k_file = text(k, "file", "");
        const json file = read_json_file(resolve(base, c.k_file), "k.file");
        values = file.is_number() ? Vector::Constant(n, file.get<double>()) : to_vector(file, "k.file");
    } else {
        throw ConfigError("key \"k\" must be a number, an array or {\"file\": path}");
    }
    if (values.size() != n) {
        throw ConfigError("key \"k\" needs " + std::to_string(n) + " Gamma_R values, got " +
                          std::to_string(values.size()));
    }
    c.k = RobinCoefficient(std::move(values));
    if (!c.k.admissible(c.params.k_min, c.params.k_max)) {
        std::ostringstream os;
        os << "key \"k\" outside [k_min, k_max] = [" << c.params.k_min << ", " << c.params.k_max << "]";
        throw ConfigError(os.str());
    }
}

void parse_box(const json& doc, SolverConfig& c) {
    if (!doc.contains("box")) return;
    const json& b = doc.at("box");
    if (!b.is_object()) throw ConfigError("key \"box\" must be an object");
    reject_unknown(b, {"pressure_lo", "pressure_hi", "average_lo", "average_hi", "pressure_samples", "average_samples"},
                   "box.");
    c.box.pressure_lo = number(b, "pressure_lo", c.box.pressure_lo);
    c.box.pressure_hi = number(b, "pressure_hi", c.box.pressure_hi);
    c.box.average_lo = number(b, "average_lo", c.box.average_lo);
    c.box.average_hi = number(b, "average_hi", c.box.average_hi);
    c.box.pressure_samples = integer(b, "pressure_samples", c.box.pressure_samples);
    c.box.average_samples = integer(b, "average_samples", c.box.average_samples);
}

}  // namespace

SolverConfig parse_config(const std::filesystem::path& path) {
    return parse_config_json(read_json_file(path, "config"), path.parent_path());
}

SolverConfig parse_config_json(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc, top_level_keys, "");
    SolverConfig c;
    c.n_x = integer(doc, "n_x", c.n_x);
    c.n_y = integer(doc, "n_y", c.n_y);
    c.L_x = number(doc, "L_x", c.L_x);
    if (c.n_x < 3) throw ConfigError("key \"n_x\" must be at least 3");
    if (c.n_y < 3) throw ConfigError("key \"n_y\" must be at least 3");
    if (!(c.L_x > 0.0)) throw ConfigError("key \"L_x\" must be positive");
    try {
        c.robin_side = parse_edge(text(doc, "robin_side", "left"));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("key \"robin_side\": ") + e.what());
    }

    ModelParams& p = c.params;
    p.permeability = number(doc, "A", p.permeability);
    p.diffusivity = number(doc, "D", p.diffusivity);
    p.gas_density = number(doc, "rho_F", p.gas_density);
    p.ambient_pressure = number(doc, "p_F", p.ambient_pressure);
    p.gas_constant = number(doc, "R", p.gas_constant);
    p.horizon = number(doc, "T", p.horizon);
    p.time_step = number(doc, "dt", p.time_step);
    p.pressure_exponent = number(doc, "alpha", p.pressure_exponent);
    p.density_exponent = number(doc, "beta", p.density_exponent);
    p.clamp_floor = number(doc, "eps_reg", p.clamp_floor);
    p.k_min = number(doc, "k_min", p.k_min);
    p.k_max = number(doc, "k_max", p.k_max);
    try {
        c.mode = parse_mode(text(doc, "mode", "power_mean"));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("key \"mode\": ") + e.what());
    }

    SolverOptions& o = c.options;
    o.linear.tolerance = number(doc, "tol_lin", o.linear.tolerance);
    o.linear.max_iterations = integer(doc, "max_lin", 10 * c.n_y * c.n_y);
    o.picard.tolerance = number(doc, "tol_picard", o.picard.tolerance);
    o.picard.max_iterations = integer(doc, "max_picard", o.picard.max_iterations);
    o.couple_tolerance = number(doc, "tol_couple", o.couple_tolerance);
    o.max_couple = integer(doc, "max_couple", o.max_couple);
    o.relaxation = number(doc, "relax", o.relaxation);
    c.tol_g = number(doc, "tol_g", c.tol_g);
    c.max_iter = integer(doc, "max_iter", c.max_iter);

    struct Positive {
        const char* key;
        double value;
    };
    for (const Positive& check : {Positive{"tol_lin", o.linear.tolerance}, Positive{"tol_picard", o.picard.tolerance},
                                  Positive{"tol_couple", o.couple_tolerance}, Positive{"tol_g", c.tol_g}}) {
        if (!(check.value > 0.0)) throw ConfigError(std::string("key \"") + check.key + "\" must be positive");
    }
    if (o.linear.max_iterations < 1) throw ConfigError("key \"max_lin\" must be at least 1");
    if (o.picard.max_iterations < 1) throw ConfigError("key \"max_picard\" must be at least 1");
    if (o.max_couple < 1) throw ConfigError("key \"max_couple\" must be at least 1");
    if (c.max_iter < 0) throw ConfigError("key \"max_iter\" must be non-negative");
    if (!(o.relaxation > 0.0 && o.relaxation <= 1.0)) throw ConfigError("key \"relax\" must lie in (0, 1]");

    parse_box(doc, c);
    if (doc.contains("seed")) {
        const json& s = doc.at("seed");
        if (!s.is_number_unsigned()) throw ConfigError("key \"seed\" must be a non-negative integer");
        c.seed = s.get<std::uint64_t>();
    }
    c.output_dir = text(doc, "output_dir", c.output_dir);
    if (doc.contains("allow_invalid")) {
        if (!doc.at("allow_invalid").is_boolean()) throw ConfigError("key \"allow_invalid\" must be a boolean");
        c.allow_invalid = doc.at("allow_invalid").get<bool>();
    }

    const MacroGrid macro(c.n_x, c.L_x);
    if (doc.contains("c_f")) {
        p.amplitude = number(doc, "c_f", p.amplitude);
        c.amplitude_given = true;
    } else {
        p.amplitude = 1.0;
        p.amplitude = suggest_amplitude(p, macro, c.mode, c.box);
    }

    c.assumptions = validate_assumptions(p, macro, c.mode, c.box);
    if (!c.assumptions.ok() && !c.allow_invalid) {
        throw ConfigError("assumption check failed: " + c.assumptions.failures());
    }
    if (!(p.k_min > 0.0 && p.k_min <= p.k_max)) throw ConfigError("keys \"k_min\"/\"k_max\": need 0 < k_min <= k_max");
    parse_k(doc, base_dir, c);
    parse_initial(doc, base_dir, c);
    return c;
}

json to_json(const SolverConfig& c) {
    const ModelParams& p = c.params;
    json doc;
    doc["n_x"] = c.n_x;
    doc["n_y"] = c.n_y;
    doc["L_x"] = c.L_x;
    doc["robin_side"] = std::string(to_string(c.robin_side));
    doc["A"] = p.permeability;
    doc["D"] = p.diffusivity;
    doc["rho_F"] = p.gas_density;
    doc["p_F"] = p.ambient_pressure;
    doc["R"] = p.gas_constant;
    doc["T"] = p.horizon;
    doc["dt"] = p.time_step;
    doc["alpha"] = p.pressure_exponent;
    doc["beta"] = p.density_exponent;
    doc["c_f"] = p.amplitude;
    doc["eps_reg"] = p.clamp_floor;
    doc["k_min"] = p.k_min;
    doc["k_max"] = p.k_max;
    doc["mode"] = to_string(c.mode);
    doc["tol_lin"] = c.options.linear.tolerance;
    doc["max_lin"] = c.options.linear.max_iterations;
    doc["tol_picard"] = c.options.picard.tolerance;
    doc["max_picard"] = c.options.picard.max_iterations;
    doc["tol_couple"] = c.options.couple_tolerance;
    doc["max_couple"] = c.options.max_couple;
    doc["relax"] = c.options.relaxation;
    doc["tol_g"] = c.tol_g;
    doc["max_iter"] = c.max_iter;
    json ini;
    switch (c.initial.kind) {
    case InitialCondition::Kind::constant:
        ini = {{"preset", "constant"}, {"value", c.initial.value}};
        break;
    case InitialCondition::Kind::cosines:
        ini = {{"preset", "cosines"}, {"mean", c.initial.mean}, {"amplitude", c.initial.amplitude}};
        break;
    case InitialCondition::Kind::equilibrium:
        ini = {{"preset", "equilibrium"}};
        break;
    case InitialCondition::Kind::nodal: {
        json values = json::array();
        for (Eigen::Index x = 0; x < c.initial.nodal.cols(); ++x) {
            values.push_back(std::vector<double>(c.initial.nodal.col(x).begin(), c.initial.nodal.col(x).end()));
        }
        ini = {{"preset", "nodal"}, {"values", values}};
        break;
    }
    }
    doc["initial"] = ini;
    doc["k"] = std::vector<double>(c.k.values().begin(), c.k.values().end());
    doc["box"] = {{"pressure_lo", c.box.pressure_lo},       {"pressure_hi", c.box.pressure_hi},
                  {"average_lo", c.box.average_lo},         {"average_hi", c.box.average_hi},
                  {"pressure_samples", c.box.pressure_samples}, {"average_samples", c.box.average_samples}};
    doc["seed"] = c.seed;
    doc["output_dir"] = c.output_dir;
    doc["allow_invalid"] = c.allow_invalid;
    return doc;
}

Problem make_problem(const SolverConfig& c) {
    Problem problem;
    problem.geometry.macro = MacroGrid(c.n_x, c.L_x);
    problem.geometry.micro = build_micro_grid(c.n_y, c.robin_side);
    problem.params = c.params;
    problem.mode = c.mode;
    problem.k = c.k;
    problem.initial = c.initial;
    problem.options = c.options;
    problem.box = c.box;
    problem.allow_unverified = c.allow_invalid;
    return problem;
}

Vector read_coefficient(const std::string& value_or_path, int robin_nodes) {
    double value = 0.0;
    const char* first = value_or_path.data();
    const char* last = first + value_or_path.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc() && ptr == last) return Vector::Constant(robin_nodes, value);
    const json doc = read_json_file(value_or_path, "coefficient");
    const Vector v = doc.is_number() ? Vector::Constant(robin_nodes, doc.get<double>()) : to_vector(doc, value_or_path);
    if (v.size() != robin_nodes) {
        throw ConfigError(value_or_path + ": needs " + std::to_string(robin_nodes) + " Gamma_R values");
    }
    return v;
}

}  // namespace twoscale::cli
