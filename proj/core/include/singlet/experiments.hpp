#pragma once

// Reproducible experiment runner: every experiment takes a seed, runs either
// in exact mode (postselection probability chains, no sampling) or sampled
// Monte-Carlo mode, and emits CSV rows plus a JSON summary. Identical
// config + seed produces byte-identical output. Every observed value sits
// next to its analytic target and tolerance in the same row.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "singlet/errors.hpp"

namespace singlet {

enum class ExperimentKind {
    purify_curve,
    progmeas_error,
    fusion_stats,
    growth_scaling,
    bell_ghz_verify,
    rotation_robustness,
};

ExperimentKind experiment_from_name(const std::string& name); // throws ConfigError
std::string experiment_name(ExperimentKind kind);

enum class RunMode { exact, sample };

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::purify_curve;
    std::uint64_t seed = 12345;
    long long trials = 0; // 0 = per-experiment default
    RunMode mode = RunMode::exact;
    std::map<std::string, std::string> parameters;
    std::string output_path; // file prefix; empty = in-memory only
};

struct ExperimentReport {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    bool pass = true;
    std::string csv;          // header + rows, '.' decimal, no locale
    std::string summary_json; // stable (sorted) key order
};

/// Runs one experiment; writes <output_path>.csv and <output_path>.json when
/// a path is configured. Throws ConfigError for unknown experiments, bad
/// parameters or unwritable paths.
ExperimentReport run_experiment(const ExperimentConfig& config);

// --- acceptance suite ------------------------------------------------------------

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyOptions {
    /// Sampling-bias mutation hook: nonzero values tamper with the sampled
    /// branch probabilities so the suite can demonstrate it notices.
    double sampling_bias = 0.0;
};

struct VerifyReport {
    std::vector<CriterionResult> criteria;
    bool pass = false;
    std::string rendered; // one line per criterion; byte-comparable
};

/// Runs every acceptance criterion at its pinned tolerance, twice, and checks
/// the two reports are byte-identical (criterion 10).
VerifyReport verify_all(std::uint64_t seed, const VerifyOptions& options = {});

} // namespace singlet
