#include "twoscale_cli/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "twoscale/errors.hpp"

namespace twoscale::cli {

namespace {

using nlohmann::json;

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <class Row>
void write_rows(const Trajectory& traj, const std::filesystem::path& path, const std::string& header, Row&& row) {
    std::ofstream out = open_output(path);
    out << header << '\n';
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        for (int x = 0; x < traj.macro_nodes; ++x) {
            out << format_double(traj.times[n]) << ',' << x;
            row(out, n, x);
            out << '\n';
        }
    }
    finish(out, path);
}

std::string indexed_header(const std::string& prefix, int count) {
    std::string h = "t,x_index";
    for (int i = 0; i < count; ++i) h += "," + prefix + std::to_string(i);
    return h;
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("cannot format number");
    return std::string(buf.data(), ptr);
}

void write_pressure_csv(const Trajectory& traj, const std::filesystem::path& path) {
    write_rows(traj, path, "t,x_index,pi", [&](std::ostream& out, std::size_t n, int x) {
        out << ',' << format_double(traj.pressure[n][x]);
    });
}

void write_density_csv(const Trajectory& traj, const std::filesystem::path& path) {
    write_rows(traj, path, indexed_header("rho_", traj.micro_points), [&](std::ostream& out, std::size_t n, int x) {
        for (double v : traj.density[n].micro(x)) out << ',' << format_double(v);
    });
}

void write_trace_csv(const Trajectory& traj, int boundary_nodes, const std::filesystem::path& path) {
    write_rows(traj, path, indexed_header("trace_", boundary_nodes), [&](std::ostream& out, std::size_t n, int x) {
        for (Eigen::Index i = 0; i < traj.traces[n].cols(); ++i) out << ',' << format_double(traj.traces[n](x, i));
    });
}

json to_json(const MeasurementSet& m) {
    json doc;
    doc["format"] = "twoscale-measurement";
    doc["version"] = 1;
    doc["steps"] = m.steps;
    doc["macro_nodes"] = m.macro_nodes;
    doc["boundary_nodes"] = m.boundary_nodes;
    doc["time_step"] = m.time_step;
    doc["noise_level"] = m.noise_level;
    doc["noise_norm"] = m.noise_norm;
    doc["seed"] = m.seed;
    doc["provenance"] = m.provenance;
    doc["layout"] = "step-major (step 1..N, macro node, Gamma_N node)";
    doc["values"] = std::vector<double>(m.values.begin(), m.values.end());
    if (m.true_coefficient.size()) {
        doc["true_coefficient"] = std::vector<double>(m.true_coefficient.begin(), m.true_coefficient.end());
    }
    return doc;
}

MeasurementSet measurement_from_json(const json& doc) {
    try {
        if (doc.at("format") != "twoscale-measurement") throw ConfigError("not a measurement file");
        MeasurementSet m;
        m.steps = doc.at("steps").get<int>();
        m.macro_nodes = doc.at("macro_nodes").get<int>();
        m.boundary_nodes = doc.at("boundary_nodes").get<int>();
        m.time_step = doc.at("time_step").get<double>();
        m.noise_level = doc.at("noise_level").get<double>();
        m.noise_norm = doc.at("noise_norm").get<double>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.provenance = doc.at("provenance").get<std::string>();
        const auto values = doc.at("values").get<std::vector<double>>();
        m.values = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
        if (doc.contains("true_coefficient")) {
            const auto k = doc.at("true_coefficient").get<std::vector<double>>();
            m.true_coefficient = Eigen::Map<const Vector>(k.data(), static_cast<Eigen::Index>(k.size()));
        }
        if (m.values.size() != static_cast<Eigen::Index>(m.steps) * m.macro_nodes * m.boundary_nodes) {
            throw ShapeError("measurement values do not match the stated shape");
        }
        if (!m.values.allFinite()) throw ConfigError("measurement contains non-finite values");
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed measurement: ") + e.what());
    }
}

void write_measurement(const MeasurementSet& meas, const std::filesystem::path& path) {
    write_json(to_json(meas), path);
}

MeasurementSet read_measurement(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open measurement file " + path.string());
    try {
        return measurement_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

json make_manifest(const std::string& command, const json& config_echo, const std::filesystem::path& dir,
                   const std::vector<std::string>& files, const json& extra) {
    json manifest;
    manifest["tool"] = "twoscale";
    manifest["version"] = tool_version;
    manifest["command"] = command;
    manifest["config"] = config_echo;
    json table = json::object();
    std::string listing;
    for (const auto& name : files) {
        const auto path = dir / name;
        const std::string hash = sha256_file(path);
        table[name] = {{"sha256", hash}, {"bytes", std::filesystem::file_size(path)}};
    }
    for (const auto& [name, entry] : table.items()) listing += name + ' ' + entry["sha256"].get<std::string>() + '\n';
    manifest["files"] = table;
    manifest["digest"] = sha256_hex(listing + config_echo.dump());
    for (const auto& [key, value] : extra.items()) manifest[key] = value;
    return manifest;
}

}  // namespace twoscale::cli
