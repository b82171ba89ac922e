#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "soundheat/cli.hpp"

namespace fs = std::filesystem;
using soundheat::cli::json;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("soundheat_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(SOUNDHEAT_CLI_PATH) + " " + args + " 2>/dev/null").c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json small_config() {
    return json{{"preset", "P2"}, {"bc", "dirichlet"}, {"n_interior", 16}, {"T", "0.25"}, {"h", "1/64"},
                {"nonlinearity", {{"beta", {{"kind", "cubic"}, {"a", 1}}}}}};
}

}  // namespace

TEST(Config, Defaults) {
    const auto cfg = soundheat::cli::parse_config(json::object());
    EXPECT_EQ(cfg.preset.preset, soundheat::Preset::P1);
    EXPECT_EQ(cfg.n_interior, 64u);
    EXPECT_EQ(cfg.h, 1.0 / 256);
    EXPECT_TRUE(cfg.nonlinearity.is_linear());
    EXPECT_EQ(cfg.resolved["params"]["gamma"], "2");
}

TEST(Config, DecimalStringsRoundCorrectly) {
    json j = small_config();
    j["params"] = {{"epsilon", "0.1"}};
    const auto cfg = soundheat::cli::parse_config(j);
    EXPECT_EQ(cfg.preset.epsilon, 0.1);
    EXPECT_EQ(cfg.h, 1.0 / 64);
    EXPECT_EQ(cfg.T, 0.25);
}

TEST(Config, CollectsEveryError) {
    json j = small_config();
    j["bc"] = "periodic";
    j["h"] = 0.3;
    j["params"] = {{"gamma", 0.5}};
    try {
        soundheat::cli::parse_config(j);
        FAIL();
    } catch (const soundheat::cli::ConfigError& e) {
        EXPECT_GE(e.messages.size(), 3u);
    }
}

TEST(Config, RejectsInvalid) {
    for (auto mutate : std::vector<std::function<void(json&)>>{
             [](json& j) { j["preset"] = "P9"; },
             [](json& j) { j["n_interior"] = 1; },
             [](json& j) { j["T"] = "-1"; },
             [](json& j) { j["h"] = "abc"; },
             [](json& j) { j["nonlinearity"]["beta"] = {{"kind", "odd_polynomial"}, {"coefficients", {1, 1}}}; },
             [](json& j) { j["nonlinearity"]["beta"] = {{"kind", "cubic"}, {"a", -1}}; },
             [](json& j) { j["solver"] = {{"path", "magic"}}; },
             [](json& j) { j["initial"] = {{"profile", "single_mode"}, {"k", 0}}; },
             [](json& j) { j["h_list"] = {0.05, 0.02}; },
             [](json& j) {
                 j["preset"] = "P1";
                 j["nonlinearity"] = {{"beta", {{"kind", "cubic"}}}};
             }}) {
        json j = small_config();
        mutate(j);
        EXPECT_THROW(soundheat::cli::parse_config(j), soundheat::cli::ConfigError) << j.dump();
    }
}

TEST(Config, RandomProfileIsReproducible) {
    const soundheat::Grid1D g(32, soundheat::Boundary::Neumann);
    const auto a = soundheat::cli::make_initial(soundheat::cli::RandomSmooth{7, 2.0}, g);
    const auto b = soundheat::cli::make_initial(soundheat::cli::RandomSmooth{7, 2.0}, g);
    const auto c = soundheat::cli::make_initial(soundheat::cli::RandomSmooth{8, 2.0}, g);
    EXPECT_EQ(a.phi0, b.phi0);
    EXPECT_NE(a.phi0, c.phi0);
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(soundheat::cli::fmt(0.1), "0.1");
    EXPECT_EQ(soundheat::cli::fmt(1.0), "1");
    EXPECT_EQ(soundheat::cli::fmt(1e-20), "1e-20");
    const double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(soundheat::cli::fmt(x)), x);
}

TEST(Cli, InvalidConfigExitsOne) {
    const auto dir = scratch_dir("invalid");
    json j = small_config();
    j["h"] = "0.3";
    const auto cfg = write_config(dir, j);
    EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + (dir / "out").string()), 1);
    EXPECT_FALSE(fs::exists(dir / "out" / "energy.csv"));
    std::ofstream(dir / "broken.json") << "{ not json";
    EXPECT_EQ(run_cli("run --config " + (dir / "broken.json").string() + " --out " + (dir / "out").string()), 1);
}

TEST(Cli, ZeroDataRun) {
    const auto dir = scratch_dir("zero");
    json j = small_config();
    j["initial"] = {{"profile", "zero"}};
    const auto cfg = write_config(dir, j);
    ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out " + dir.string() + " --snapshot-stride 4"), 0);
    std::ifstream in(dir / "energy.csv");
    std::string line;
    int rows = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (!header_seen) {
            EXPECT_EQ(line, "n,t,kinetic,elastic,thermal,potential,dissipation_b1,dissipation_cross,identity_residual");
            header_seen = true;
            continue;
        }
        ++rows;
        EXPECT_NE(line.find(",0,0,0,0,0,0,0"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 17);
    EXPECT_TRUE(fs::exists(dir / "snapshots.csv"));
    const std::string e = slurp(dir / "energy.csv");
    EXPECT_NE(e.find("# h_tilde: "), std::string::npos);
    EXPECT_NE(e.find("# C_A1B2: "), std::string::npos);
    EXPECT_NE(e.find("\"preset\":\"P2\""), std::string::npos);
}

TEST(Cli, OutputsAreByteDeterministic) {
    const auto dir = scratch_dir("determinism");
    json j = small_config();
    j["initial"] = {{"profile", "random_smooth"}, {"seed", 3}};
    j["h_list"] = {"1/16", "1/32", "1/64"};
    const auto cfg = write_config(dir, j);
    for (const char* sub : {"a", "b"}) {
        const auto out = (dir / sub).string();
        ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out " + out + " --snapshot-stride 3"), 0);
        ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + out + " --threads 2"), 0);
        ASSERT_EQ(run_cli("energy-audit --config " + cfg.string() + " --out " + out), 0);
    }
    for (const char* f : {"energy.csv", "steps.csv", "snapshots.csv", "summary.json", "sweep.csv", "sweep.json",
                          "bounds.csv", "audit.csv", "audit.json"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    const json s = json::parse(slurp(dir / "a" / "sweep.json"));
    EXPECT_TRUE(s.contains("fitted_order"));
    EXPECT_TRUE(s.contains("fitted_M"));
    EXPECT_EQ(s["header"]["config"]["preset"], "P2");
}

TEST(Cli, DivergenceExitsTwoWithPartialOutput) {
    const auto dir = scratch_dir("diverge");
    json j = small_config();
    j["T"] = "4";
    j["h"] = "0.5";
    j["nonlinearity"]["beta"] = {{"kind", "cubic"}, {"a", 1e6}};
    j["initial"] = {{"profile", "single_mode"}, {"k", 1}, {"theta0", 0}, {"phi0", 50}, {"v0", 0}};
    j["solver"] = {{"newton_max_iter", 2}};
    const auto cfg = write_config(dir, j);
    EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + dir.string()), 2);
    const json s = json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(s["status"], "newton_diverged");
    EXPECT_TRUE(fs::exists(dir / "energy.csv"));
}

TEST(Cli, OracleCheck) {
    const auto dir = scratch_dir("oracle");
    json j = {{"preset", "P1"}, {"n_interior", 32}, {"T", "0.1"}, {"h", "0.001"}};
    const auto cfg = write_config(dir, j);
    ASSERT_EQ(run_cli("oracle-check --config " + cfg.string() + " --out " + dir.string()), 0);
    std::ifstream in(dir / "oracle.csv");
    std::string line;
    while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    }
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "0,0,");
    const json s = json::parse(slurp(dir / "oracle.json"));
    EXPECT_LT(s["max_deviation"].get<double>(), 1e-2);

    json nl = small_config();
    EXPECT_EQ(run_cli("oracle-check --config " + write_config(dir, nl).string() + " --out " + dir.string()), 1);
}

namespace {

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Cli, P1DefaultsEnergyDecreases) {
    const auto dir = scratch_dir("p1energy");
    const auto cfg = write_config(dir, json{{"preset", "P1"}});
    ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out " + dir.string()), 0);
    const auto rows = csv_rows(dir / "energy.csv");
    ASSERT_EQ(rows.size(), 129u);
    double prev = 1e300;
    for (const auto& r : rows) {
        const double e = std::stod(r[2]) + std::stod(r[3]) + std::stod(r[4]);
        EXPECT_LE(e, prev * (1 + 1e-12));
        prev = e;
    }
}

TEST(Cli, P1DefaultsSweepOrder) {
    const auto dir = scratch_dir("p1sweep");
    const auto cfg = write_config(dir, json{{"preset", "P1"}});
    ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + dir.string()), 0);
    const json s = json::parse(slurp(dir / "sweep.json"));
    EXPECT_GE(s["fitted_order"].get<double>(), 0.45);
    EXPECT_EQ(csv_rows(dir / "sweep.csv").size(), 5u);
}

TEST(Cli, EnergyAuditP2HasNoViolations) {
    const auto dir = scratch_dir("audit");
    json j = small_config();
    j["T"] = "1";
    j["h"] = "0.001";
    const auto cfg = write_config(dir, j);
    ASSERT_EQ(run_cli("energy-audit --config " + cfg.string() + " --out " + dir.string()), 0);
    const json s = json::parse(slurp(dir / "audit.json"));
    EXPECT_EQ(s["lyapunov_mode"], "check");
    EXPECT_TRUE(s["lyapunov_violations"].empty());
    EXPECT_LT(s["max_relative_identity_residual"].get<double>(), 1e-10);
}
