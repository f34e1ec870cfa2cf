#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "twoscale/coupled.hpp"
#include "twoscale/inverse.hpp"

namespace twoscale::cli {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Column layouts (one row per time level and macro node):
///   pressure.csv  t,x_index,pi
///   density.csv   t,x_index,rho_0..rho_{P-1}   (micro node j*n_y + i)
///   trace.csv     t,x_index,trace_0..          (Gamma_N node order)
void write_pressure_csv(const Trajectory& traj, const std::filesystem::path& path);
void write_density_csv(const Trajectory& traj, const std::filesystem::path& path);
void write_trace_csv(const Trajectory& traj, int boundary_nodes, const std::filesystem::path& path);

nlohmann::json to_json(const MeasurementSet& meas);
MeasurementSet measurement_from_json(const nlohmann::json& doc);
void write_measurement(const MeasurementSet& meas, const std::filesystem::path& path);
MeasurementSet read_measurement(const std::filesystem::path& path);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Manifest: tool version, command, config echo, and for every listed file
/// its size and SHA-256.  "digest" hashes the sorted file table, so it
/// changes iff some output byte changes.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config_echo,
                             const std::filesystem::path& dir, const std::vector<std::string>& files,
                             const nlohmann::json& extra = nlohmann::json::object());

inline constexpr const char* tool_version = "0.1.0";

}  // namespace twoscale::cli
