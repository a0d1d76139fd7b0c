/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Configuration-driven experiment runner. Parses and validates
//              the versioned JSON experiment configs, executes assimilation
//              runs, compression benchmarks and the randomized convergence
//              suites, and emits deterministic CSV / summary artifacts.

#ifndef IPOD_EXPERIMENT_HPP
#define IPOD_EXPERIMENT_HPP

#include "ipod/assimilation.hpp"
#include "ipod/convergence_lab.hpp"
#include "ipod/synthetic_streams.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ipod {

/// Configuration problems: unreadable file, unknown keys, bad values.
/// Mapped to exit code 2 by the command line tool.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A run broke one of its declared invariants (divergence, contract
/// violations). Mapped to exit code 3.
class InvariantFailureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    linear_assimilation,
    burgers_assimilation,
    convergence_suite,
    ipod_bench,
};

struct MeshSection {
    double h = 0.05;          // linear problem
    int cells = 50;           // burgers problem
    double tau = 0.005;
    double total_time = 1.0;
    double beta_plus = 1.0;   // linear
    double beta_minus = 0.5;  // linear
    double nu = 0.1;          // burgers
};

struct ObservationSection {
    double noise_sigma = 0.05;
};

struct DescentSection {
    double gamma = 5e-4;
    double kappa = 1.0;
    double tol_sd = 1e-5;
    std::string termination = "grad-norm";  // or "objective-decrement"
    int max_iters = 600;
    std::string mode = "both";  // "exact" | "inexact" | "both"
};

struct CompressionSection {
    double tol_p = 1e-8;
    double tol_sv = 1e-8;
    double tol_o = 1e-12;
    int reorth_cap = 5;
    std::string weight = "L2-mass";  // or "H1"
};

struct DiagnosticsSection {
    bool reference_gradient = false;
};

struct SuiteSection {
    int instances = 1000;
    int max_dimension = 12;
    int max_iterations = 36;
    double noise_fraction = 0.9;
};

struct BenchSection {
    int rows = 120;
    int cols = 200;
    std::string kind = "geometric-decay";  // or "exact-low-rank"
    double decay = 0.5;
    int rank = 10;
    double floor_rel = 1e-12;
    int duplicates = 0;
    std::string weight = "identity";  // or "mass-1d"
    std::vector<double> tolerances = {1e-10, 1e-8, 1e-6};
};

struct ExperimentConfig {
    int schema_version = 1;
    ExperimentKind kind = ExperimentKind::linear_assimilation;
    std::string output_dir = "runs/out";
    std::uint64_t seed = 1;

    MeshSection mesh;
    ObservationSection observation;
    DescentSection descent;
    CompressionSection compression;
    DiagnosticsSection diagnostics;
    SuiteSection suite;
    BenchSection bench;

    /// Parses and strictly validates (unknown keys are rejected).
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    /// Canonical serialized form: every effective value explicit, keys sorted.
    std::string normalized_json() const;

    AssimilationConfig descent_config() const;

    /// Output directory after applying the IPODLAB_OUTPUT_ROOT override.
    std::string resolved_output_dir() const;
};

/// Aggregate outcome of the randomized convergence suite.
struct SuiteInstanceRow {
    int id = 0;
    std::string family;
    double kappa = 0.0;
    double epsilon = 0.0;
    double margin_convex = std::numeric_limits<double>::quiet_NaN();
    double margin_pl = std::numeric_limits<double>::quiet_NaN();
    double margin_sc = std::numeric_limits<double>::quiet_NaN();
    double hyp_fraction = 1.0;
};

struct ConvergenceSuiteResult {
    int instances = 0;
    long asserted_points = 0;
    int bound_violations = 0;
    long threshold_steps = 0;  // steps satisfying the decrease hypothesis
    int decrease_violations = 0;
    long gradient_dominance_checks = 0;
    int gradient_dominance_violations = 0;
    double aggregate_hypothesis_fraction = 1.0;
    double worst_margin_convex = -std::numeric_limits<double>::infinity();
    double worst_margin_pl = -std::numeric_limits<double>::infinity();
    double worst_margin_sc = -std::numeric_limits<double>::infinity();
    std::vector<SuiteInstanceRow> rows;
};

/// Runs the randomized inexact-gradient suite: quadratic and 1D
/// gradient-dominated objectives, the four noise regimes (none, random
/// direction, opposing at capped magnitude, opposing at a fraction of the
/// decrease threshold), and all three bound checkers where applicable.
/// Margins beyond a scale-aware slack count as violations.
ConvergenceSuiteResult run_convergence_suite(const SuiteSection& suite, std::uint64_t seed);

struct RunOutcome {
    std::string output_dir;
    std::string summary_text;
};

/// Executes one experiment and writes its artifact files. Throws ConfigError
/// or InvariantFailureError; anything else is an environment problem.
RunOutcome run_experiment(const ExperimentConfig& config);

/// Re-renders the summary table of a completed run directory. Byte-identical
/// across invocations.
std::string render_summary(const std::string& run_dir);

/// Expands "key=v1,v2,..." assignments (dotted JSON paths) into the cartesian
/// product of configs derived from the base config.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base,
                                           const std::string& base_json_text,
                                           const std::vector<std::string>& params);

/// Runs a set of experiments across worker threads with isolated output
/// directories. Returns per-run exit codes (0 / 2 / 3).
std::vector<int> run_sweep(const std::vector<ExperimentConfig>& configs, int jobs);

}  // namespace ipod

#endif  // IPOD_EXPERIMENT_HPP
