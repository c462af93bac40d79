#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "../tools/cli.hpp"
#include "isac/config.hpp"

using namespace isac;

namespace {

const char* kSweepConfig = R"(# Phase I error-rate sweep
[experiment]
kind = range-error
trials = 1000
seed = 1
k_values = 2..8
tx_powers = 6, 8
noiseless = false

[scenario]
region_side = 200
num_bs = 4

[ofdm]
n_subcarriers = 3300
subcarrier_spacing = 30e3
cp_length = 232
max_paths = 200
noise_power = auto
)";

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream(path) << text;
    return path;
}

} // namespace

TEST_CASE("parser handles sections, comments, and overrides") {
    ConfigFile cfg = ConfigFile::parse_string(
        "[a]\nx = 1 # trailing comment\n# full line\ny= hello world \n[b]\nx=2\n");
    CHECK(cfg.has("a", "x"));
    CHECK(cfg.get("a", "x", "") == "1");
    CHECK(cfg.get("a", "y", "") == "hello world");
    CHECK(cfg.get("b", "x", "") == "2");
    CHECK(cfg.get("b", "missing", "fallback") == "fallback");
    CHECK_FALSE(cfg.has("c", "x"));

    cfg.apply_override("a.x=42");
    cfg.apply_override("c.fresh=ok");
    CHECK(cfg.get("a", "x", "") == "42");
    CHECK(cfg.get("c", "fresh", "") == "ok");
    CHECK_THROWS_AS(cfg.apply_override("no-dot"), ConfigError);
}

TEST_CASE("experiment config loads with ranges and auto values") {
    const ConfigFile cfg = ConfigFile::parse_string(kSweepConfig);
    CHECK(validate_config(cfg).empty());
    const ExperimentConfig c = load_experiment_config(cfg);
    CHECK(c.kind == ExperimentKind::RangeError);
    CHECK(c.trials == 1000);
    CHECK(c.k_values == std::vector<int>{2, 3, 4, 5, 6, 7, 8});
    CHECK(c.tx_powers == std::vector<double>{6.0, 8.0});
    CHECK(c.ofdm.noise_power == 0.0); // auto: resolved by the runner
    CHECK_FALSE(c.noiseless);
    CHECK(c.bs_coords.empty());
}

TEST_CASE("unknown keys are rejected on load but reported by validate") {
    ConfigFile cfg = ConfigFile::parse_string(kSweepConfig);
    cfg.apply_override("experiment.typo_key=1");
    const auto diagnostics = validate_config(cfg);
    REQUIRE_FALSE(diagnostics.empty());
    CHECK(diagnostics[0].find("typo_key") != std::string::npos);
    CHECK_THROWS_AS(load_experiment_config(cfg), ConfigError);
}

TEST_CASE("semantic violations surface through validate_config") {
    ConfigFile cfg = ConfigFile::parse_string(kSweepConfig);
    cfg.apply_override("ofdm.max_paths=232");
    const auto diagnostics = validate_config(cfg);
    REQUIRE_FALSE(diagnostics.empty());
    bool mentions_lq = false;
    for (const auto& d : diagnostics)
        if (d.find("L must be < Q") != std::string::npos) mentions_lq = true;
    CHECK(mentions_lq);

    ConfigFile bad_kind = ConfigFile::parse_string("[experiment]\nkind = bogus\n");
    CHECK_FALSE(validate_config(bad_kind).empty());
}

TEST_CASE("serialized experiment config parses back to the same values") {
    ConfigFile cfg = ConfigFile::parse_string(kSweepConfig);
    cfg.apply_override("experiment.sigma=0.3517");
    cfg.apply_override("experiment.delta0=3.25");
    cfg.apply_override("scenario.bs=0 100; 100 0; 0 -100; -100 0");
    const ExperimentConfig original = load_experiment_config(cfg);

    const std::string echoed = serialize_experiment_config(original);
    const ExperimentConfig reparsed =
        load_experiment_config(ConfigFile::parse_string(echoed));

    CHECK(reparsed.kind == original.kind);
    CHECK(reparsed.trials == original.trials);
    CHECK(reparsed.seed == original.seed);
    CHECK(reparsed.k_values == original.k_values);
    CHECK(reparsed.tx_powers == original.tx_powers);
    CHECK(reparsed.region_side == original.region_side);
    CHECK(reparsed.num_bs == original.num_bs);
    CHECK(reparsed.sigma == original.sigma);
    CHECK(reparsed.delta0 == original.delta0);
    CHECK(reparsed.error_radius == original.error_radius);
    CHECK(reparsed.noiseless == original.noiseless);
    CHECK(reparsed.range_model == original.range_model);
    CHECK(reparsed.ofdm.n_subcarriers == original.ofdm.n_subcarriers);
    CHECK(reparsed.ofdm.subcarrier_spacing == original.ofdm.subcarrier_spacing);
    CHECK(reparsed.ofdm.cp_length == original.ofdm.cp_length);
    CHECK(reparsed.ofdm.max_paths == original.ofdm.max_paths);
    CHECK(reparsed.gain.beta == original.gain.beta);
    REQUIRE(reparsed.bs_coords.size() == original.bs_coords.size());
    for (std::size_t i = 0; i < original.bs_coords.size(); ++i) {
        CHECK(reparsed.bs_coords[i].x == original.bs_coords[i].x);
        CHECK(reparsed.bs_coords[i].y == original.bs_coords[i].y);
    }
}

TEST_CASE("scenario section with inline points") {
    const ConfigFile cfg = ConfigFile::parse_string(
        "[scenario]\nregion_side = 20\nbs = 0 3; 5 0; 0 -4\ntargets = 2,-2; -2,2\n");
    const Scenario s = load_scenario(cfg);
    CHECK(s.region_side == 20.0);
    REQUIRE(s.num_bs() == 3);
    CHECK(s.bs[1].x == 5.0);
    REQUIRE(s.num_targets() == 2);
    CHECK(s.targets[1].y == 2.0);
}

TEST_CASE("points csv round trip") {
    const std::string path = write_temp("isac_test_points.csv", "");
    const std::vector<Point> pts{{1.25, -2.5}, {0.0, 17.75}, {-3.125, 4.0}};
    write_points_csv(pts, path);
    const auto loaded = read_points_csv(path);
    std::remove(path.c_str());
    REQUIRE(loaded.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(loaded[i].x == pts[i].x);
        CHECK(loaded[i].y == pts[i].y);
    }
}

TEST_CASE("cli exit codes") {
    CHECK(run_cli({}) == kExitUsage);
    CHECK(run_cli({"definitely-not-a-command"}) == kExitUsage);
    CHECK(run_cli({"validate", "--config", "/nonexistent/file.cfg"}) == kExitConfig);

    const std::string good = write_temp("isac_test_good.cfg", kSweepConfig);
    CHECK(run_cli({"validate", "--config", good}) == kExitOk);

    const std::string bad = write_temp("isac_test_bad.cfg",
                                       std::string(kSweepConfig) + "bogus_key = 1\n");
    CHECK(run_cli({"validate", "--config", bad}) == kExitConfig);
    std::remove(good.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("cli ghost detection on the bundled layouts") {
    CHECK(run_cli({"ghosts", "--config", "configs/example1.cfg"}) == kExitOk);
    CHECK(run_cli({"ghosts", "--config", "configs/example2.cfg"}) == kExitOk);
}
