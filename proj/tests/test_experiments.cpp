#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "singlet/experiments.hpp"
#include "singlet/j_measurement.hpp"

using namespace singlet;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("experiment names round-trip") {
    for (const char* name : {"purify_curve", "progmeas_error", "fusion_stats", "growth_scaling",
                             "bell_ghz_verify", "rotation_robustness"})
        CHECK(experiment_name(experiment_from_name(name)) == name);
    CHECK_THROWS_AS(experiment_from_name("nonsense"), ConfigError);
}

TEST_CASE("purify_curve exact mode satisfies the recurrence columns") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::purify_curve;
    cfg.parameters["r0"] = "0.3";
    cfg.parameters["epsilon"] = "0.01";
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.pass);
    CHECK(rep.columns.front() == "k");
    CHECK(rep.rows.size() >= 2);
    // every row carries observed, target and tolerance columns
    CHECK(std::find(rep.columns.begin(), rep.columns.end(), "tol_r") != rep.columns.end());
    CHECK(rep.csv.find("k,r_state") == 0);
}

TEST_CASE("progmeas_error exact mode reports 1/2^n") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::progmeas_error;
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.pass);
    REQUIRE(rep.rows.size() == 4);
    const char* expected[4] = {"0.5", "0.25", "0.125", "0.0625"};
    for (int i = 0; i < 4; ++i) CHECK(rep.rows[i][1] == expected[i]);
}

TEST_CASE("fusion_stats in both modes") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::fusion_stats;
    cfg.parameters["a"] = "2";
    cfg.parameters["b"] = "2";
    CHECK(run_experiment(cfg).pass);

    cfg.mode = RunMode::sample;
    cfg.trials = 4000;
    cfg.seed = 42;
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.pass);
    REQUIRE(rep.rows.size() == 3);

    ExperimentConfig bad = cfg;
    bad.parameters["a"] = "7";
    CHECK_THROWS_AS(run_experiment(bad), ConfigError);
    bad.parameters["a"] = "two";
    CHECK_THROWS_AS(run_experiment(bad), ConfigError);
}

TEST_CASE("growth_scaling reports branch frequencies and resources") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::growth_scaling;
    cfg.trials = 2000;
    cfg.parameters["target"] = "12";
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.pass);
    bool has_fresh = false;
    for (const auto& row : rep.rows)
        if (row[0] == "count_fresh_clusters") has_fresh = true;
    CHECK(has_fresh);
}

TEST_CASE("bell_ghz_verify and rotation_robustness pass") {
    ExperimentConfig bg;
    bg.experiment = ExperimentKind::bell_ghz_verify;
    bg.parameters["n_max"] = "4";
    CHECK(run_experiment(bg).pass);

    ExperimentConfig rot;
    rot.experiment = ExperimentKind::rotation_robustness;
    rot.trials = 60;
    CHECK(run_experiment(rot).pass);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::fusion_stats;
    cfg.mode = RunMode::sample;
    cfg.trials = 2000;
    cfg.seed = 7;
    const ExperimentReport a = run_experiment(cfg);
    const ExperimentReport b = run_experiment(cfg);
    CHECK(a.csv == b.csv);
    CHECK(a.summary_json == b.summary_json);

    cfg.seed = 8;
    const ExperimentReport c = run_experiment(cfg);
    CHECK(a.csv != c.csv);
}

TEST_CASE("reports are written next to the configured prefix") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "singlet_test_out";
    fs::remove_all(dir);
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::rotation_robustness;
    cfg.trials = 30;
    cfg.output_path = (dir / "rot").string();
    const ExperimentReport rep = run_experiment(cfg);
    CHECK(slurp(dir / "rot.csv") == rep.csv);
    CHECK(slurp(dir / "rot.json") == rep.summary_json);
    fs::remove_all(dir);

    ExperimentConfig bad = cfg;
    bad.output_path = "/proc/version/nope/x";
    CHECK_THROWS_AS(run_experiment(bad), ConfigError);
}

TEST_CASE("sampling-bias hook makes sampled statistics fail") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::fusion_stats;
    cfg.mode = RunMode::sample;
    cfg.trials = 20000;
    cfg.seed = 42;
    REQUIRE(run_experiment(cfg).pass);

    test_hooks::j_sampling_bias = 0.05;
    const ExperimentReport tampered = run_experiment(cfg);
    test_hooks::j_sampling_bias = 0.0;
    CHECK_FALSE(tampered.pass);
}
