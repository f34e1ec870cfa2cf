#include <gtest/gtest.h>

#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include "support.hpp"
#include "twoscale/errors.hpp"
#include "twoscale_cli/cli.hpp"
#include "twoscale_cli/config.hpp"
#include "twoscale_cli/io.hpp"

namespace twoscale::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path write_config(const fs::path& dir, const json& doc, const std::string& name = "config.json") {
    const fs::path path = dir / name;
    std::ofstream(path) << doc.dump(2);
    return path;
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"twoscale"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

json reference_doc() {
    return {{"n_x", 8}, {"n_y", 9}, {"T", 0.2}, {"dt", 0.01}, {"k", 1.0}, {"seed", 3}};
}

std::string config_error(const json& doc) {
    try {
        parse_config_json(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(Config, MinimalDefaults) {
    const SolverConfig c = parse_config_json({{"n_x", 8}, {"n_y", 9}});
    EXPECT_EQ(c.n_x, 8);
    EXPECT_EQ(c.n_y, 9);
    EXPECT_EQ(c.L_x, 1.0);
    EXPECT_EQ(c.robin_side, Edge::left);
    EXPECT_EQ(c.params.time_step, 0.01);
    EXPECT_EQ(c.params.horizon, 0.2);
    EXPECT_EQ(c.params.pressure_exponent, 0.5);
    EXPECT_EQ(c.params.density_exponent, 0.5);
    EXPECT_FALSE(c.amplitude_given);
    EXPECT_NEAR(c.assumptions.contraction_product, 0.5, 1e-12);
    EXPECT_EQ(c.options.couple_tolerance, 1e-9);
    EXPECT_EQ(c.options.picard.tolerance, 1e-10);
    EXPECT_EQ(c.options.picard.max_iterations, 200);
    EXPECT_EQ(c.options.linear.tolerance, 1e-12);
    EXPECT_EQ(c.options.relaxation, 1.0);
    EXPECT_EQ(c.tol_g, 1e-8);
    EXPECT_EQ(c.max_iter, 50);
    ASSERT_EQ(c.k.size(), 9);
    EXPECT_TRUE((c.k.values().array() == 1.0).all());
    EXPECT_TRUE(c.assumptions.ok());
}

TEST(Config, ExponentSumRejected) {
    EXPECT_NE(config_error({{"alpha", 0.7}, {"beta", 0.2}}).find("alpha+beta"), std::string::npos);
}

TEST(Config, CoefficientBounds) {
    EXPECT_EQ(config_error({{"k", 1.0}, {"k_min", 0.1}, {"k_max", 10.0}}), "");
    EXPECT_NE(config_error({{"k", 0.05}}).find("k"), std::string::npos);
    EXPECT_NE(config_error({{"n_y", 3}, {"k", {1.0, 2.0}}}).find("k"), std::string::npos);
    const SolverConfig c = parse_config_json({{"n_y", 3}, {"k", {1.0, 2.0, 3.0}}});
    EXPECT_EQ(c.k[2], 3.0);
}

TEST(Config, UnknownKeysRejected) {
    EXPECT_NE(config_error({{"bogus", 1}}).find("bogus"), std::string::npos);
    EXPECT_NE(config_error({{"initial", {{"preset", "constant"}, {"mean", 1}}}}).find("initial.mean"),
              std::string::npos);
    EXPECT_NE(config_error({{"box", {{"size", 1}}}}).find("box.size"), std::string::npos);
    EXPECT_NE(config_error({{"robin_side", "diagonal"}}).find("robin_side"), std::string::npos);
    EXPECT_NE(config_error({{"n_y", 2}}).find("n_y"), std::string::npos);
}

TEST(Config, InvalidAllowedOnRequest) {
    const SolverConfig c = parse_config_json({{"alpha", 0.7}, {"beta", 0.2}, {"c_f", 0.5}, {"allow_invalid", true}});
    EXPECT_FALSE(c.assumptions.ok());
    EXPECT_TRUE(make_problem(c).allow_unverified);
}

TEST(Config, EchoRoundTrip) {
    const json doc = {{"n_x", 6}, {"n_y", 5}, {"robin_side", "top"}, {"c_f", 1.5}, {"relax", 0.8},
                      {"initial", {{"preset", "constant"}, {"value", 0.3}}}, {"k", {1, 2, 3, 2, 1}}};
    const SolverConfig c = parse_config_json(doc);
    const json echo = to_json(c);
    EXPECT_EQ(to_json(parse_config_json(echo)), echo);
    EXPECT_EQ(echo.at("c_f"), 1.5);
    EXPECT_EQ(echo.at("robin_side"), "top");
}

TEST(Config, NodalInitialFromFile) {
    const fs::path dir = test::scratch_dir("nodal");
    json values = json::array();
    for (int x = 0; x < 4; ++x) values.push_back(std::vector<double>(9, 0.25 * x + 0.1));
    std::ofstream(dir / "rho.json") << values.dump();
    const fs::path cfg = write_config(dir, {{"n_x", 4}, {"n_y", 3}, {"initial", {{"preset", "file"}, {"path", "rho.json"}}}});
    const SolverConfig c = parse_config(cfg);
    EXPECT_EQ(c.initial.kind, InitialCondition::Kind::nodal);
    EXPECT_EQ(c.initial.nodal(0, 3), 0.85);
    EXPECT_THROW(parse_config(dir / "missing.json"), ConfigError);
}

TEST(Io, FormatDoubleRoundTrips) {
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int s = 0; s < 1000; ++s) {
        const double v = u(rng) * std::pow(10.0, s % 40 - 20);
        const std::string text = format_double(v);
        double back = 0.0;
        std::from_chars(text.data(), text.data() + text.size(), back);
        EXPECT_EQ(back, v);
    }
}

TEST(Io, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, EmptyTrajectoryWritesHeaders) {
    const fs::path dir = test::scratch_dir("empty");
    const Trajectory t;
    write_pressure_csv(t, dir / "p.csv");
    write_trace_csv(t, 3, dir / "t.csv");
    EXPECT_EQ(slurp(dir / "p.csv"), "t,x_index,pi\n");
    EXPECT_EQ(slurp(dir / "t.csv"), "t,x_index,trace_0,trace_1,trace_2\n");
    write_json(make_manifest("solve", json::object(), dir, {"p.csv", "t.csv"}), dir / "manifest.json");
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Io, MeasurementRoundTripIsBitwise) {
    const Problem p = test::reference_problem();
    MeasurementSet m = measure(p, run_simulation(p));
    add_noise(m, 1e-3, 9, p.geometry);
    const fs::path dir = test::scratch_dir("meas");
    write_measurement(m, dir / "m.json");
    const MeasurementSet back = read_measurement(dir / "m.json");
    EXPECT_TRUE(back.values == m.values);
    EXPECT_TRUE(back.true_coefficient == m.true_coefficient);
    EXPECT_EQ(back.noise_norm, m.noise_norm);
    EXPECT_EQ(back.noise_level, m.noise_level);
    EXPECT_EQ(back.seed, m.seed);
    EXPECT_EQ(back.provenance, m.provenance);
    EXPECT_EQ(back.time_step, m.time_step);
    EXPECT_EQ(back.steps, m.steps);
}

TEST(Io, ManifestDigestTracksBytes) {
    const fs::path dir = test::scratch_dir("digest");
    std::ofstream(dir / "a.txt") << "hello";
    const json m1 = make_manifest("x", json::object(), dir, {"a.txt"});
    const json m2 = make_manifest("x", json::object(), dir, {"a.txt"});
    EXPECT_EQ(m1.at("digest"), m2.at("digest"));
    std::ofstream(dir / "a.txt") << "hellp";
    const json m3 = make_manifest("x", json::object(), dir, {"a.txt"});
    EXPECT_NE(m1.at("digest"), m3.at("digest"));
    EXPECT_NE(m1.at("digest"), make_manifest("x", json{{"seed", 1}}, dir, {"a.txt"}).at("digest"));
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    const fs::path dir = test::scratch_dir("usage");
    const fs::path cfg = write_config(dir, reference_doc());
    EXPECT_EQ(run_cli({"solve", "-c", cfg.string(), "--bogus"}).code, 2);
    const CliRun bad = run_cli({"solve", "-c", (dir / "missing.json").string()});
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.err.find("config"), std::string::npos);
}

TEST(Cli, SolveIsDeterministicAcrossWorkers) {
    const fs::path dir = test::scratch_dir("solve");
    const fs::path cfg = write_config(dir, reference_doc());
    ASSERT_EQ(run_cli({"solve", "-c", cfg.string(), "-o", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run_cli({"solve", "-c", cfg.string(), "-o", (dir / "b").string(), "-j", "4"}).code, 0);
    for (const char* f : {"manifest.json", "pressure.csv", "density.csv", "trace.csv"}) {
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    const json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(manifest.at("files").at("pressure.csv").at("sha256"), sha256_file(dir / "a" / "pressure.csv"));
    for (const char* key : {"A", "D", "R", "rho_F", "p_F", "T", "dt", "alpha", "beta", "c_f", "eps_reg", "k",
                            "initial", "tol_lin", "tol_picard", "tol_couple", "relax", "mode", "seed"}) {
        EXPECT_TRUE(manifest.at("config").contains(key)) << key;
    }
}

TEST(Cli, MeasureThenInvert) {
    const fs::path dir = test::scratch_dir("invert");
    const fs::path cfg = write_config(dir, reference_doc());
    ASSERT_EQ(run_cli({"measure", "-c", cfg.string(), "-o", (dir / "m").string()}).code, 0);
    const CliRun inv = run_cli({"invert", "-c", cfg.string(), "-m", (dir / "m" / "measurement.json").string(),
                                "--k0", "0.5", "-o", (dir / "i").string()});
    ASSERT_EQ(inv.code, 0) << inv.err;
    const auto pos = inv.out.find("relative k-error ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_LE(std::stod(inv.out.substr(pos + 17)), 1e-2);
    const json report = json::parse(slurp(dir / "i" / "identification.json"));
    EXPECT_EQ(report.at("termination"), "gradient_tol");
}

TEST(Cli, NoisyMeasureIsSeeded) {
    const fs::path dir = test::scratch_dir("noisy");
    const fs::path cfg = write_config(dir, reference_doc());
    for (const char* sub : {"a", "b"}) {
        ASSERT_EQ(run_cli({"measure", "-c", cfg.string(), "--noise", "1e-3", "--seed", "11", "-o", (dir / sub).string()}).code, 0);
    }
    ASSERT_EQ(run_cli({"measure", "-c", cfg.string(), "--noise", "1e-3", "--seed", "12", "-o", (dir / "c").string()}).code, 0);
    EXPECT_EQ(slurp(dir / "a" / "measurement.json"), slurp(dir / "b" / "measurement.json"));
    EXPECT_NE(slurp(dir / "a" / "measurement.json"), slurp(dir / "c" / "measurement.json"));
}

TEST(Cli, VerifyScalingPasses) {
    const fs::path dir = test::scratch_dir("vscale");
    const fs::path cfg = write_config(dir, reference_doc());
    const CliRun r = run_cli({"verify-scaling", "-c", cfg.string(), "--lambda", "2", "-o", (dir / "out").string()});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
    // verify commands write only the report and the manifest
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir / "out")) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    EXPECT_EQ(names, (std::vector<std::string>{"manifest.json", "verify-scaling.json"}));
}

TEST(Cli, VerifyAssumptionsFailsWithTable) {
    const fs::path dir = test::scratch_dir("vassume");
    json doc = reference_doc();
    doc["alpha"] = 0.7;
    doc["beta"] = 0.2;
    doc["c_f"] = 0.5;
    EXPECT_EQ(run_cli({"verify-assumptions", "-c", write_config(dir, doc).string(), "-o", dir.string()}).code, 2);
    doc["allow_invalid"] = true;
    const CliRun r = run_cli({"verify-assumptions", "-c", write_config(dir, doc).string(), "-o", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("alpha+beta"), std::string::npos);
    EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, VerifyNeumannMapPasses) {
    const fs::path dir = test::scratch_dir("vnmap");
    const fs::path cfg = write_config(dir, reference_doc());
    EXPECT_EQ(run_cli({"verify-neumann-map", "-c", cfg.string(), "-o", dir.string()}).code, 0);
    const json report = json::parse(slurp(dir / "verify-neumann-map.json"));
    EXPECT_TRUE(report.at("pass").get<bool>());
}

}  // namespace
}  // namespace twoscale::cli
