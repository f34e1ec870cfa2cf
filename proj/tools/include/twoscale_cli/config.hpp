#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "twoscale/coupled.hpp"
#include "twoscale/model.hpp"

namespace twoscale::cli {

/// Parsed and validated experiment configuration.
struct SolverConfig {
    int n_x = 8;
    int n_y = 9;
    double L_x = 1.0;
    Edge robin_side = Edge::left;
    ModelParams params;
    /// False when c_f was omitted and derived from the contraction target.
    bool amplitude_given = false;
    NonlinearityMode mode = NonlinearityMode::power_mean;
    SolverOptions options;
    double tol_g = 1e-8;
    int max_iter = 50;
    InitialCondition initial;
    /// Source of the initial density when read from a file (echo only).
    std::string initial_file;
    RobinCoefficient k;
    /// Source of k when read from a file (echo only).
    std::string k_file;
    SampleBox box;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    bool allow_invalid = false;
    AssumptionReport assumptions;
};

/// Reads, defaults and validates a JSON config.  Relative file references
/// resolve against the config's directory.  Throws ConfigError naming the key.
SolverConfig parse_config(const std::filesystem::path& path);
SolverConfig parse_config_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Canonical echo with every numerics-relevant value (k and nodal initial
/// data inlined).  parse_config_json(to_json(c)) reproduces c.
nlohmann::json to_json(const SolverConfig& config);

Problem make_problem(const SolverConfig& config);

/// A number, or a JSON file holding a number or an array of Gamma_R values.
Vector read_coefficient(const std::string& value_or_path, int robin_nodes);

}  // namespace twoscale::cli
