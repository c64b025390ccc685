// singlet: experiment runner CLI.
//
// One subcommand per experiment plus verify_all. Exit codes: 0 all checks
// passed, 1 at least one pass/fail flag failed, 2 configuration error.
//
// Output goes to <prefix>.csv / <prefix>.json where the prefix is --out, or
// $SINGLET_OUT_DIR/<experiment> when the environment variable is set.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "singlet/experiments.hpp"

namespace {

struct CommonArgs {
    std::string seed_str;
    long long trials = 0;
    std::string out;
    std::string config_file;
    bool exact = false;
    bool sample = false;
    std::vector<std::string> params;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--seed", args.seed_str, "RNG seed (64-bit unsigned)");
    cmd->add_option("--trials", args.trials, "Monte-Carlo trial count (0 = experiment default)");
    cmd->add_option("--out", args.out, "output path prefix for the CSV and JSON reports");
    cmd->add_option("--config", args.config_file, "JSON config file (flags override its fields)");
    cmd->add_flag("--exact", args.exact, "exact mode: postselection chains, no sampling");
    cmd->add_flag("--sample", args.sample, "Monte-Carlo sampling mode");
    cmd->add_option("--param", args.params, "experiment parameter key=value (repeatable)");
}

singlet::ExperimentConfig build_config(const std::string& experiment, const CommonArgs& args) {
    singlet::ExperimentConfig cfg;
    cfg.experiment = singlet::experiment_from_name(experiment);

    if (!args.config_file.empty()) {
        std::ifstream in(args.config_file);
        if (!in) throw singlet::ConfigError("cannot open config file: " + args.config_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw singlet::ConfigError("malformed config file: " + std::string(e.what()));
        }
        if (j.contains("experiment") &&
            j["experiment"].get<std::string>() != experiment)
            throw singlet::ConfigError("config file is for experiment '" +
                                       j["experiment"].get<std::string>() + "'");
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("trials")) cfg.trials = j["trials"].get<long long>();
        if (j.contains("mode")) {
            const std::string mode = j["mode"].get<std::string>();
            if (mode == "exact")
                cfg.mode = singlet::RunMode::exact;
            else if (mode == "sample")
                cfg.mode = singlet::RunMode::sample;
            else
                throw singlet::ConfigError("config mode must be 'exact' or 'sample'");
        }
        if (j.contains("out")) cfg.output_path = j["out"].get<std::string>();
        if (j.contains("parameters"))
            for (const auto& [key, value] : j["parameters"].items())
                cfg.parameters[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }

    if (!args.seed_str.empty()) {
        try {
            cfg.seed = std::stoull(args.seed_str);
        } catch (const std::exception&) {
            throw singlet::ConfigError("--seed is not a 64-bit unsigned integer");
        }
    }
    if (args.trials > 0) cfg.trials = args.trials;
    if (args.exact && args.sample)
        throw singlet::ConfigError("--exact and --sample are mutually exclusive");
    if (args.exact) cfg.mode = singlet::RunMode::exact;
    if (args.sample) cfg.mode = singlet::RunMode::sample;
    for (const std::string& kv : args.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw singlet::ConfigError("--param expects key=value, got: " + kv);
        cfg.parameters[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!args.out.empty()) {
        cfg.output_path = args.out;
    } else if (cfg.output_path.empty()) {
        if (const char* dir = std::getenv("SINGLET_OUT_DIR"))
            cfg.output_path = std::string(dir) + "/" + experiment;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"singlet: J-measurement protocol simulator and verifier"};
    app.require_subcommand(1);

    const std::vector<std::string> experiments = {
        "purify_curve",  "progmeas_error",  "fusion_stats",
        "growth_scaling", "bell_ghz_verify", "rotation_robustness"};

    std::map<std::string, CommonArgs> args;
    for (const std::string& name : experiments) {
        CLI::App* cmd = app.add_subcommand(name, "run the " + name + " experiment");
        add_common(cmd, args[name]);
    }

    std::string verify_seed = "12345";
    CLI::App* verify = app.add_subcommand("verify_all", "run the full acceptance suite");
    verify->add_option("--seed", verify_seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (verify->parsed()) {
            std::uint64_t seed = 12345;
            try {
                seed = std::stoull(verify_seed);
            } catch (const std::exception&) {
                throw singlet::ConfigError("--seed is not a 64-bit unsigned integer");
            }
            const singlet::VerifyReport report = singlet::verify_all(seed);
            std::fputs(report.rendered.c_str(), stdout);
            return report.pass ? 0 : 1;
        }
        for (const std::string& name : experiments) {
            if (!app.get_subcommand(name)->parsed()) continue;
            const singlet::ExperimentConfig cfg = build_config(name, args[name]);
            const singlet::ExperimentReport report = singlet::run_experiment(cfg);
            std::fputs(report.csv.c_str(), stdout);
            if (!cfg.output_path.empty())
                std::fprintf(stderr, "wrote %s.csv and %s.json\n", cfg.output_path.c_str(),
                             cfg.output_path.c_str());
            std::fprintf(stderr, "%s\n", report.pass ? "PASS" : "FAIL");
            return report.pass ? 0 : 1;
        }
    } catch (const singlet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
