#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>

#include "robinwave/scenario.hpp"

using namespace robinwave;
using namespace robinwave::scenario;
namespace fs = std::filesystem;

namespace {

class ScenarioTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("robinwave_scenario_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write_config(const std::string& name, const nlohmann::json& j) {
        const auto path = (dir_ / name).string();
        std::ofstream(path) << j.dump(2);
        return path;
    }

    int run_config(const std::string& config, const fs::path& out, std::optional<std::uint64_t> seed = {},
                   bool validate_only = false) {
        std::ostringstream log;
        RunRequest req{config, out.string(), seed, validate_only};
        const int rc = execute(req, log);
        last_log_ = log.str();
        return rc;
    }

    fs::path dir_;
    std::string last_log_;
};

nlohmann::json minimal_wave() {
    return {{"name", "minimal"},
            {"task", "simulate-wave"},
            {"grid", {{"kind", "interval"}, {"extents", {0, 1}}, {"n", {41}}}},
            {"source", {{"tag", "chafee-cubic"}, {"params", {{"lambda", 0.5}}}}},
            {"damping", {{"tag", "linear"}, {"params", {{"gain", 1.0}}}}},
            {"params", {{"T", 1.0}, {"snapshot_stride", 10}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

// Decimal comma and digit grouping, to catch locale-dependent formatting.
struct CommaDecimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
    char do_thousands_sep() const override { return '.'; }
    std::string do_grouping() const override { return "\3"; }
};

}  // namespace

TEST_F(ScenarioTest, MinimalWaveWritesLedgerSnapshotsAndManifest) {
    const auto cfg = write_config("wave.json", minimal_wave());
    ASSERT_EQ(run_config(cfg, dir_ / "out"), kOk) << last_log_;
    for (const char* f : {"ledger.csv", "snapshots.csv", "convergence.csv", "summary.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    }
    EXPECT_EQ(first_line(dir_ / "out" / "ledger.csv"), "t,E,D,defect");
    EXPECT_EQ(first_line(dir_ / "out" / "snapshots.csv"), "t,node_id,x,u,ut");
    const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
    for (const char* key : {"config", "versions", "seed", "wall_time_seconds", "artifacts"}) {
        EXPECT_TRUE(manifest.contains(key)) << key;
    }
}

TEST_F(ScenarioTest, UnknownTaskIsAConfigError) {
    auto j = minimal_wave();
    j["task"] = "simulate-everything";
    EXPECT_EQ(run_config(write_config("bad.json", j), dir_ / "out"), kConfig);
    EXPECT_NE(last_log_.find("unknown task"), std::string::npos);
}

TEST_F(ScenarioTest, SchemaViolationsAreConfigErrors) {
    const auto expect_config = [&](nlohmann::json j, const std::string& why) {
        EXPECT_EQ(run_config(write_config("bad.json", j), dir_ / "out"), kConfig) << why;
    };
    auto j = minimal_wave();
    j["colour"] = "blue";
    expect_config(j, "unknown top-level key");
    j = minimal_wave();
    j["params"]["Tmax"] = 3;
    expect_config(j, "unknown task parameter");
    j = minimal_wave();
    j["params"].erase("T");
    expect_config(j, "missing T");
    j = minimal_wave();
    j["source"] = {{"tag", "example-exp"}, {"params", {{"lambda", 0.5}}}};
    expect_config(j, "owning module rejects lambda <= 1");
    j = minimal_wave();
    j["params"]["dt"] = 0.5;
    expect_config(j, "CFL violation");
    j = minimal_wave();
    j["grid"]["kind"] = "torus";
    expect_config(j, "unknown grid kind");
    j = minimal_wave();
    j.erase("damping");
    expect_config(j, "damping required");
    std::ofstream(dir_ / "garbage.json") << "{ not json";
    EXPECT_EQ(run_config((dir_ / "garbage.json").string(), dir_ / "out"), kConfig);
}

TEST_F(ScenarioTest, SameSeedGivesByteIdenticalCsv) {
    const auto cfg = write_config("wave.json", minimal_wave());
    ASSERT_EQ(run_config(cfg, dir_ / "a", 7), kOk);
    ASSERT_EQ(run_config(cfg, dir_ / "b", 7), kOk);
    ASSERT_EQ(run_config(cfg, dir_ / "c", 8), kOk);
    for (const char* f : {"ledger.csv", "snapshots.csv", "convergence.csv"}) {
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
    EXPECT_NE(slurp(dir_ / "a" / "snapshots.csv"), slurp(dir_ / "c" / "snapshots.csv"));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "c" / "manifest.json")).at("seed"), 8);
}

TEST_F(ScenarioTest, ManifestConfigRoundTrips) {
    auto j = minimal_wave();
    j["seed"] = 11;
    const auto cfg = write_config("wave.json", j);
    ASSERT_EQ(run_config(cfg, dir_ / "out"), kOk);
    const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
    const Scenario echoed = parse_scenario(manifest.at("config"));
    Scenario original = load_scenario(cfg);
    original.output_dir = (dir_ / "out").string();
    EXPECT_EQ(echoed, original);
    EXPECT_EQ(parse_scenario(to_json(echoed)), echoed);
}

TEST_F(ScenarioTest, ArtifactsIgnoreTheGlobalLocale) {
    const auto cfg = write_config("wave.json", minimal_wave());
    const std::locale saved = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
    const int rc = run_config(cfg, dir_ / "out");
    std::locale::global(saved);
    ASSERT_EQ(rc, kOk);
    std::ifstream in(dir_ / "out" / "ledger.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
        ++rows;
    }
    EXPECT_GT(rows, 10);
    EXPECT_NO_THROW(nlohmann::json::parse(slurp(dir_ / "out" / "summary.json")));
}

TEST_F(ScenarioTest, ValidateDoesNotRun) {
    const auto cfg = write_config("wave.json", minimal_wave());
    EXPECT_EQ(run_config(cfg, dir_ / "out", {}, true), kOk);
    EXPECT_FALSE(fs::exists(dir_ / "out" / "manifest.json"));
}

TEST_F(ScenarioTest, IoFailuresExitWithFour) {
    EXPECT_EQ(run_config((dir_ / "missing.json").string(), dir_ / "out"), kIo);
    std::ofstream(dir_ / "blocker") << "file";
    EXPECT_EQ(run_config(write_config("wave.json", minimal_wave()), dir_ / "blocker" / "sub"), kIo);
}

TEST_F(ScenarioTest, NumericalFailureLeavesDiagnostic) {
    {
        std::ofstream csv(dir_ / "series.csv");
        csv << "t,distance\n1,0.5\n2,0.0\n3,0.1\n4,0.05\n";
    }
    const nlohmann::json j = {{"name", "bad-series"},
                              {"task", "fit-rate"},
                              {"params", {{"series", "series.csv"}, {"t_lo", 1.0}, {"t_hi", 4.0}}}};
    EXPECT_EQ(run_config(write_config("fit.json", j), dir_ / "out"), kNumerical);
    ASSERT_TRUE(fs::exists(dir_ / "out" / "diagnostic.json"));
    const auto diag = nlohmann::json::parse(slurp(dir_ / "out" / "diagnostic.json"));
    EXPECT_EQ(diag.at("task"), "fit-rate");
    EXPECT_NE(diag.at("error").get<std::string>().find("nonpositive"), std::string::npos);
}

TEST_F(ScenarioTest, FitRateReadsSeriesRelativeToConfig) {
    {
        std::ofstream csv(dir_ / "series.csv");
        csv << "t,distance\n";
        for (int k = 1; k <= 50; ++k) csv << k << "," << io::format_double(std::exp(-0.3 * k)) << "\n";
    }
    const nlohmann::json j = {{"name", "fit"},
                              {"task", "fit-rate"},
                              {"params", {{"series", "series.csv"}, {"t_lo", 2.0}, {"t_hi", 40.0}}}};
    ASSERT_EQ(run_config(write_config("fit.json", j), dir_ / "out"), kOk) << last_log_;
    const auto fit = nlohmann::json::parse(slurp(dir_ / "out" / "rate_fit.json"));
    EXPECT_EQ(fit.at("model"), "exponential");
    EXPECT_NEAR(fit.at("rate_or_exponent").get<double>(), 0.3, 1e-12);
}

TEST_F(ScenarioTest, PlanarAndEquilibriaExports) {
    const nlohmann::json planar = {{"name", "planar"},
                                   {"task", "planar-flow"},
                                   {"params", {{"fan", 2}, {"tau_max", 20.0}}}};
    ASSERT_EQ(run_config(write_config("planar.json", planar), dir_ / "planar"), kOk) << last_log_;
    EXPECT_EQ(first_line(dir_ / "planar" / "trajectory_00.csv"), "tau,rho,theta_total,W");
    const auto cls = nlohmann::json::parse(slurp(dir_ / "planar" / "classification.json"));
    EXPECT_EQ(cls.at("trajectories").size(), 2u);

    const nlohmann::json eq = {{"name", "eq"},
                               {"task", "find-equilibria"},
                               {"grid", {{"kind", "interval"}, {"extents", {0, 1}}, {"n", {101}}}},
                               {"source", {{"tag", "chafee-cubic"}, {"params", {{"lambda", 10.0}}}}},
                               {"params", {{"n_starts", 6}}}};
    ASSERT_EQ(run_config(write_config("eq.json", eq), dir_ / "eq"), kOk) << last_log_;
    const auto atlas = nlohmann::json::parse(slurp(dir_ / "eq" / "atlas.json"));
    ASSERT_TRUE(atlas.is_array());
    EXPECT_EQ(atlas.size(), 3u);
    for (const auto& a : atlas) {
        for (const char* key : {"energy", "residual", "degenerate", "field_csv_path"}) EXPECT_TRUE(a.contains(key)) << key;
        EXPECT_TRUE(fs::exists(dir_ / "eq" / a.at("field_csv_path").get<std::string>()));
    }
}

TEST_F(ScenarioTest, ShippedScenariosValidate) {
    const fs::path root = fs::path(ROBINWAVE_SOURCE_DIR) / "scenarios";
    int count = 0;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.path().extension() != ".json") continue;
        const Scenario sc = load_scenario(entry.path().string());
        EXPECT_NO_THROW(validate(sc, root)) << entry.path();
        ++count;
    }
    EXPECT_GE(count, 8);
}
