/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

#include "ipod/experiment.hpp"

#include "ipod/matrix_market.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace ipod {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void reject_unknown_keys(const json& object, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (auto it = object.begin(); it != object.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
        }
    }
}

template <typename T>
void read_field(const json& object, const char* key, T& target) {
    if (object.contains(key)) {
        try {
            target = object.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: bad value for \"") + key + "\": " + e.what());
        }
    }
}

std::string kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::linear_assimilation: return "linear-assimilation";
        case ExperimentKind::burgers_assimilation: return "burgers-assimilation";
        case ExperimentKind::convergence_suite: return "convergence-suite";
        case ExperimentKind::ipod_bench: return "ipod-bench";
    }
    return "?";
}

ExperimentKind kind_from_name(const std::string& name) {
    if (name == "linear-assimilation") return ExperimentKind::linear_assimilation;
    if (name == "burgers-assimilation") return ExperimentKind::burgers_assimilation;
    if (name == "convergence-suite") return ExperimentKind::convergence_suite;
    if (name == "ipod-bench") return ExperimentKind::ipod_bench;
    throw ConfigError("config: unknown experiment kind \"" + name + "\"");
}

bool is_assimilation(ExperimentKind kind) {
    return kind == ExperimentKind::linear_assimilation ||
           kind == ExperimentKind::burgers_assimilation;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
}

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config: parse failure in " + path.string() + ": " + e.what());
    }
}

// Fixtures of the nonlinear analog (not tied to any reference experiment).
double burgers_truth_initial_fn(double x) { return 0.5 * std::sin(M_PI * x); }
double burgers_forcing_fn(double x, double t) {
    return 2.0 * std::sin(2.0 * M_PI * x) * std::exp(-t) + 0.5 * x * (1.0 - x);
}

struct ModeSummary {
    int iterations = 0;
    double relative_error = 0.0;
    double final_objective = 0.0;
    double final_grad_norm = 0.0;
    Eigen::Index storage_rows = 0;
    Eigen::Index storage_cols = 0;
    std::optional<double> max_xi;
    std::optional<CompressedTrajectory> compression;
};

double relative_trajectory_error(const std::vector<Eigen::VectorXd>& recovered,
                                 const std::vector<Eigen::VectorXd>& truth, const SpMat& mass,
                                 double tau) {
    double total = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const Eigen::VectorXd diff = recovered[j] - truth[j];
        const double denom = truth[j].dot(mass * truth[j]);
        if (denom > 0.0) {
            total += tau * diff.dot(mass * diff) / denom;
        }
    }
    return std::sqrt(total);
}

void write_iteration_csv(const fs::path& path, const std::vector<IterationRecord>& records,
                         bool compressed_mode) {
    std::ostringstream out;
    out << "iter,J,grad_norm,e_p,e_sv,rank,xi_norm,peak_snapshots\n";
    for (const IterationRecord& r : records) {
        out << r.iter << ',' << g17(r.objective) << ',' << g17(r.grad_norm) << ',';
        if (compressed_mode) {
            out << g17(r.e_p) << ',' << g17(r.e_sv) << ',' << r.rank << ',';
        } else {
            out << ",,,";
        }
        if (r.gradient_error) {
            out << g17(*r.gradient_error);
        }
        out << ',' << r.peak_snapshots << '\n';
    }
    write_text_file(path, out.str());
}

void write_ledger_csv(const fs::path& path, const std::vector<IterationRecord>& records) {
    std::ostringstream out;
    out << "iter,e_p,e_sv,bound,rank\n";
    for (const IterationRecord& r : records) {
        out << r.iter << ',' << g17(r.e_p) << ',' << g17(r.e_sv) << ',' << g17(r.e_p + r.e_sv)
            << ',' << r.rank << '\n';
    }
    write_text_file(path, out.str());
}

std::string table_row(const std::string& label, const std::vector<std::string>& cells) {
    char buf[256];
    std::string line;
    std::snprintf(buf, sizeof buf, "%-28s", label.c_str());
    line += buf;
    for (const std::string& c : cells) {
        std::snprintf(buf, sizeof buf, "  %-16s", c.c_str());
        line += buf;
    }
    while (!line.empty() && line.back() == ' ') {
        line.pop_back();
    }
    return line + "\n";
}

std::string render_assimilation_summary(const json& summary) {
    const json& modes = summary.at("modes");
    std::vector<std::string> names;
    for (const char* candidate : {"exact", "inexact"}) {
        if (modes.contains(candidate)) {
            names.push_back(candidate);
        }
    }
    std::string text = summary.at("kind").get<std::string>() + " summary\n";
    text += table_row("metric", names);
    std::vector<std::string> iters, storage, err;
    for (const std::string& name : names) {
        const json& m = modes.at(name);
        iters.push_back(std::to_string(m.at("iterations").get<long>()));
        storage.push_back(std::to_string(m.at("storage").at("rows").get<long>()) + " x " +
                          std::to_string(m.at("storage").at("cols").get<long>()));
        err.push_back(g6(m.at("relative_error").get<double>()));
    }
    text += table_row("number of iterations", iters);
    text += table_row("data storage", storage);
    text += table_row("relative trajectory error", err);
    return text;
}

std::string render_bench_summary(const json& summary) {
    std::string text = "ipod-bench summary\n";
    text += table_row("tolerance", {"exact_error", "bound", "modes", "saved_memory"});
    for (const json& row : summary.at("bench").at("rows")) {
        text += table_row(g6(row.at("tol").get<double>()),
                          {g6(row.at("exact_error").get<double>()),
                           g6(row.at("bound").get<double>()),
                           std::to_string(row.at("modes").get<long>()),
                           g6(row.at("saved_memory_pct").get<double>()) + "%"});
    }
    return text;
}

std::string render_suite_summary(const json& summary) {
    const json& s = summary.at("suite");
    std::string text = "convergence-suite summary\n";
    text += table_row("check", {"points", "violations", "worst_margin"});
    const struct {
        const char* label;
        const char* margin_key;
    } rows[] = {{"convex bound", "worst_margin_convex"},
                {"pl bound", "worst_margin_pl"},
                {"strong convexity bound", "worst_margin_sc"}};
    for (const auto& r : rows) {
        text += table_row(r.label, {std::to_string(s.at("asserted_points").get<long>()),
                                    std::to_string(s.at("bound_violations").get<long>()),
                                    g6(s.at(r.margin_key).get<double>())});
    }
    text += table_row("decrease property",
                      {std::to_string(s.at("threshold_steps").get<long>()),
                       std::to_string(s.at("decrease_violations").get<long>()), "-"});
    text += table_row("gradient dominance",
                      {std::to_string(s.at("gradient_dominance_checks").get<long>()),
                       std::to_string(s.at("gradient_dominance_violations").get<long>()), "-"});
    return text;
}

std::string render_summary_json(const json& summary) {
    const std::string kind = summary.at("kind").get<std::string>();
    if (kind == "linear-assimilation" || kind == "burgers-assimilation") {
        return render_assimilation_summary(summary);
    }
    if (kind == "ipod-bench") {
        return render_bench_summary(summary);
    }
    if (kind == "convergence-suite") {
        return render_suite_summary(summary);
    }
    throw std::runtime_error("summary: unknown kind " + kind);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: parse failure: ") + e.what());
    }
    if (!root.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    if (!root.contains("kind")) {
        throw ConfigError("config: missing required key \"kind\"");
    }

    ExperimentConfig config;
    config.kind = kind_from_name(root.at("kind").get<std::string>());

    std::vector<std::string> allowed = {"schema_version", "kind", "output_dir", "seed"};
    if (is_assimilation(config.kind)) {
        allowed.insert(allowed.end(),
                       {"mesh", "observation", "descent", "compression", "diagnostics"});
    } else if (config.kind == ExperimentKind::convergence_suite) {
        allowed.push_back("suite");
    } else {
        allowed.push_back("bench");
    }
    reject_unknown_keys(root, allowed, "the top level");

    read_field(root, "schema_version", config.schema_version);
    if (config.schema_version != 1) {
        throw ConfigError("config: unsupported schema_version " +
                          std::to_string(config.schema_version));
    }
    read_field(root, "output_dir", config.output_dir);
    read_field(root, "seed", config.seed);

    if (root.contains("mesh")) {
        const json& mesh = root.at("mesh");
        if (config.kind == ExperimentKind::linear_assimilation) {
            reject_unknown_keys(mesh, {"h", "tau", "T", "beta_plus", "beta_minus"}, "mesh");
        } else {
            reject_unknown_keys(mesh, {"cells", "tau", "T", "nu"}, "mesh");
        }
        read_field(mesh, "h", config.mesh.h);
        read_field(mesh, "cells", config.mesh.cells);
        read_field(mesh, "tau", config.mesh.tau);
        read_field(mesh, "T", config.mesh.total_time);
        read_field(mesh, "beta_plus", config.mesh.beta_plus);
        read_field(mesh, "beta_minus", config.mesh.beta_minus);
        read_field(mesh, "nu", config.mesh.nu);
    }
    if (root.contains("observation")) {
        reject_unknown_keys(root.at("observation"), {"noise_sigma"}, "observation");
        read_field(root.at("observation"), "noise_sigma", config.observation.noise_sigma);
    }
    if (root.contains("descent")) {
        const json& descent = root.at("descent");
        reject_unknown_keys(descent, {"gamma", "kappa", "tol_sd", "termination", "max_iters", "mode"},
                            "descent");
        read_field(descent, "gamma", config.descent.gamma);
        read_field(descent, "kappa", config.descent.kappa);
        read_field(descent, "tol_sd", config.descent.tol_sd);
        read_field(descent, "termination", config.descent.termination);
        read_field(descent, "max_iters", config.descent.max_iters);
        read_field(descent, "mode", config.descent.mode);
        if (config.descent.termination != "grad-norm" &&
            config.descent.termination != "objective-decrement") {
            throw ConfigError("config: termination must be grad-norm or objective-decrement");
        }
        if (config.descent.mode != "exact" && config.descent.mode != "inexact" &&
            config.descent.mode != "both") {
            throw ConfigError("config: descent mode must be exact, inexact or both");
        }
    }
    if (root.contains("compression")) {
        const json& compression = root.at("compression");
        reject_unknown_keys(compression, {"tol_p", "tol_sv", "tol_o", "reorth_cap", "weight"},
                            "compression");
        read_field(compression, "tol_p", config.compression.tol_p);
        read_field(compression, "tol_sv", config.compression.tol_sv);
        read_field(compression, "tol_o", config.compression.tol_o);
        read_field(compression, "reorth_cap", config.compression.reorth_cap);
        read_field(compression, "weight", config.compression.weight);
        if (config.compression.weight != "L2-mass" && config.compression.weight != "H1") {
            throw ConfigError("config: compression weight must be L2-mass or H1");
        }
    }
    if (root.contains("diagnostics")) {
        reject_unknown_keys(root.at("diagnostics"), {"reference_gradient"}, "diagnostics");
        read_field(root.at("diagnostics"), "reference_gradient",
                   config.diagnostics.reference_gradient);
    }
    if (root.contains("suite")) {
        const json& suite = root.at("suite");
        reject_unknown_keys(suite, {"instances", "max_dimension", "max_iterations", "noise_fraction"},
                            "suite");
        read_field(suite, "instances", config.suite.instances);
        read_field(suite, "max_dimension", config.suite.max_dimension);
        read_field(suite, "max_iterations", config.suite.max_iterations);
        read_field(suite, "noise_fraction", config.suite.noise_fraction);
        if (config.suite.instances < 1 || config.suite.max_dimension < 2 ||
            config.suite.max_iterations < 2) {
            throw ConfigError("config: suite sizes must be positive");
        }
        if (!(config.suite.noise_fraction > 0.0) || !(config.suite.noise_fraction < 1.0)) {
            throw ConfigError("config: suite noise_fraction must lie in (0, 1)");
        }
    }
    if (root.contains("bench")) {
        const json& bench = root.at("bench");
        reject_unknown_keys(
            bench, {"rows", "cols", "kind", "decay", "rank", "floor_rel", "duplicates", "weight",
                    "tolerances"},
            "bench");
        read_field(bench, "rows", config.bench.rows);
        read_field(bench, "cols", config.bench.cols);
        read_field(bench, "kind", config.bench.kind);
        read_field(bench, "decay", config.bench.decay);
        read_field(bench, "rank", config.bench.rank);
        read_field(bench, "floor_rel", config.bench.floor_rel);
        read_field(bench, "duplicates", config.bench.duplicates);
        read_field(bench, "weight", config.bench.weight);
        read_field(bench, "tolerances", config.bench.tolerances);
        if (config.bench.kind != "geometric-decay" && config.bench.kind != "exact-low-rank") {
            throw ConfigError("config: bench kind must be geometric-decay or exact-low-rank");
        }
        if (config.bench.weight != "identity" && config.bench.weight != "mass-1d") {
            throw ConfigError("config: bench weight must be identity or mass-1d");
        }
        if (config.bench.tolerances.empty()) {
            throw ConfigError("config: bench needs at least one tolerance");
        }
    }
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return from_json_text(text.str());
}

std::string ExperimentConfig::normalized_json() const {
    json root;
    root["schema_version"] = schema_version;
    root["kind"] = kind_name(kind);
    root["output_dir"] = output_dir;
    root["seed"] = seed;
    if (is_assimilation(kind)) {
        json m;
        if (kind == ExperimentKind::linear_assimilation) {
            m["h"] = mesh.h;
            m["beta_plus"] = mesh.beta_plus;
            m["beta_minus"] = mesh.beta_minus;
        } else {
            m["cells"] = mesh.cells;
            m["nu"] = mesh.nu;
        }
        m["tau"] = mesh.tau;
        m["T"] = mesh.total_time;
        root["mesh"] = m;
        root["observation"] = {{"noise_sigma", observation.noise_sigma}};
        root["descent"] = {{"gamma", descent.gamma},       {"kappa", descent.kappa},
                           {"tol_sd", descent.tol_sd},     {"termination", descent.termination},
                           {"max_iters", descent.max_iters}, {"mode", descent.mode}};
        root["compression"] = {{"tol_p", compression.tol_p},
                               {"tol_sv", compression.tol_sv},
                               {"tol_o", compression.tol_o},
                               {"reorth_cap", compression.reorth_cap},
                               {"weight", compression.weight}};
        root["diagnostics"] = {{"reference_gradient", diagnostics.reference_gradient}};
    } else if (kind == ExperimentKind::convergence_suite) {
        root["suite"] = {{"instances", suite.instances},
                         {"max_dimension", suite.max_dimension},
                         {"max_iterations", suite.max_iterations},
                         {"noise_fraction", suite.noise_fraction}};
    } else {
        root["bench"] = {{"rows", bench.rows},
                         {"cols", bench.cols},
                         {"kind", bench.kind},
                         {"decay", bench.decay},
                         {"rank", bench.rank},
                         {"floor_rel", bench.floor_rel},
                         {"duplicates", bench.duplicates},
                         {"weight", bench.weight},
                         {"tolerances", bench.tolerances}};
    }
    return root.dump(2) + "\n";
}

AssimilationConfig ExperimentConfig::descent_config() const {
    AssimilationConfig assim;
    assim.gamma = descent.gamma;
    assim.kappa = descent.kappa;
    assim.tol_sd = descent.tol_sd;
    assim.termination = descent.termination == "grad-norm" ? TerminationMode::grad_norm
                                                           : TerminationMode::objective_decrement;
    assim.max_iters = descent.max_iters;
    assim.compression.tol_p = compression.tol_p;
    assim.compression.tol_sv = compression.tol_sv;
    assim.compression.tol_o = compression.tol_o;
    assim.compression.reorth_cap = compression.reorth_cap;
    assim.weight_choice =
        compression.weight == "H1" ? WeightChoice::h1 : WeightChoice::l2_mass;
    assim.reference_gradient = diagnostics.reference_gradient;
    return assim;
}

std::string ExperimentConfig::resolved_output_dir() const {
    const char* root = std::getenv("IPODLAB_OUTPUT_ROOT");
    if (root != nullptr && root[0] != '\0' && !fs::path(output_dir).is_absolute()) {
        return (fs::path(root) / output_dir).string();
    }
    return output_dir;
}

namespace {

struct AssimilationArtifacts {
    json summary;
    std::map<std::string, std::vector<IterationRecord>> records;
    std::map<std::string, Eigen::VectorXd> final_u0;
    std::optional<CompressedTrajectory> final_state;
    double tau = 0.0;
};

AssimilationArtifacts run_assimilation(const ExperimentConfig& config) {
    std::unique_ptr<ForwardModel> model;
    Eigen::VectorXd truth_u0;
    if (config.kind == ExperimentKind::linear_assimilation) {
        auto problem = std::make_shared<const DiscreteProblem>(assemble_interface_problem(
            config.mesh.h, config.mesh.tau, config.mesh.total_time, config.mesh.beta_plus,
            config.mesh.beta_minus, default_interface_forcing()));
        truth_u0 = interface_truth_initial(*problem->mesh);
        model = std::make_unique<LinearInterfaceModel>(problem);
    } else {
        auto problem = std::make_shared<const Burgers1dProblem>(
            make_burgers_problem(config.mesh.cells, config.mesh.tau, config.mesh.total_time,
                                 config.mesh.nu, burgers_forcing_fn));
        truth_u0 = interpolate_interior_1d(*problem->mesh, burgers_truth_initial_fn);
        model = std::make_unique<BurgersModel>(problem);
    }

    // Noiseless reference trajectory; observations add seeded noise on top.
    Trajectory truth;
    {
        truth.tau = model->tau();
        Eigen::VectorXd u = truth_u0;
        for (int j = 1; j <= model->num_steps(); ++j) {
            u = model->forward_step(u, j);
            truth.snapshots.push_back(u);
        }
    }
    const ObservationSet obs =
        synth_observations(truth, config.observation.noise_sigma, config.seed);

    const AssimilationConfig assim = config.descent_config();
    const Eigen::VectorXd u0_init = Eigen::VectorXd::Zero(model->dim());

    std::vector<std::pair<std::string, DescentMode>> modes;
    if (config.descent.mode == "exact" || config.descent.mode == "both") {
        modes.emplace_back("exact", DescentMode::exact);
    }
    if (config.descent.mode == "inexact" || config.descent.mode == "both") {
        modes.emplace_back("inexact", DescentMode::inexact);
    }

    AssimilationArtifacts artifacts;
    artifacts.tau = model->tau();
    json modes_json;
    for (const auto& [name, mode] : modes) {
        DescentResult result;
        try {
            result = run_descent(*model, obs, assim, u0_init, mode);
        } catch (const DivergenceError& e) {
            throw InvariantFailureError(std::string("descent diverged: ") + e.what());
        }

        // Trajectory recovered from the final control, solved exactly.
        std::vector<Eigen::VectorXd> recovered;
        {
            Eigen::VectorXd u = result.final_u0;
            for (int j = 1; j <= model->num_steps(); ++j) {
                u = model->forward_step(u, j);
                recovered.push_back(u);
            }
        }

        ModeSummary mode_summary;
        mode_summary.iterations = result.iterations();
        mode_summary.relative_error =
            relative_trajectory_error(recovered, truth.snapshots, model->mass(), model->tau());
        mode_summary.final_objective = result.records.back().objective;
        mode_summary.final_grad_norm = result.records.back().grad_norm;
        mode_summary.storage_rows = model->dim();
        mode_summary.storage_cols =
            (mode == DescentMode::exact) ? model->num_steps()
                                         : result.final_compression->rank();

        json mj;
        mj["iterations"] = mode_summary.iterations;
        mj["relative_error"] = mode_summary.relative_error;
        mj["final_objective"] = mode_summary.final_objective;
        mj["final_grad_norm"] = mode_summary.final_grad_norm;
        mj["hit_max_iters"] = result.hit_max_iters;
        mj["storage"] = {{"rows", static_cast<long>(mode_summary.storage_rows)},
                         {"cols", static_cast<long>(mode_summary.storage_cols)}};
        if (mode == DescentMode::inexact) {
            const CompressedTrajectory& state = *result.final_compression;
            mj["compression"] = {{"e_p", state.e_p},
                                 {"e_sv", state.e_sv},
                                 {"bound", state.error_bound()},
                                 {"rank", static_cast<long>(state.rank())},
                                 {"energy_ratio", state.energy_ratio()}};
            double max_xi = 0.0;
            bool has_xi = false;
            for (const IterationRecord& r : result.records) {
                if (r.gradient_error) {
                    has_xi = true;
                    max_xi = std::max(max_xi, *r.gradient_error);
                }
            }
            if (has_xi) {
                mj["max_xi"] = max_xi;
            }
            artifacts.final_state = std::move(result.final_compression);
        }
        modes_json[name] = mj;
        artifacts.records[name] = std::move(result.records);
        artifacts.final_u0[name] = std::move(result.final_u0);
    }

    artifacts.summary["schema_version"] = 1;
    artifacts.summary["kind"] = kind_name(config.kind);
    artifacts.summary["problem"] = {{"dim", static_cast<long>(model->dim())},
                                    {"steps", model->num_steps()},
                                    {"tau", model->tau()}};
    artifacts.summary["modes"] = modes_json;
    return artifacts;
}

json run_bench(const ExperimentConfig& config) {
    StreamSpec spec;
    spec.rows = config.bench.rows;
    spec.cols = config.bench.cols;
    spec.kind = config.bench.kind == "geometric-decay" ? StreamKind::geometric_decay
                                                       : StreamKind::exact_low_rank;
    spec.weight = config.bench.weight == "identity" ? StreamWeight::identity
                                                    : StreamWeight::mass_1d;
    spec.decay = config.bench.decay;
    spec.rank = config.bench.rank;
    spec.floor_rel = config.bench.floor_rel;
    spec.duplicate_columns = config.bench.duplicates;
    spec.seed = config.seed;

    const Eigen::MatrixXd stream = make_stream(spec);
    const WeightOperator weight = make_stream_weight(spec);

    json rows = json::array();
    for (double tol : config.bench.tolerances) {
        IpodTolerances tols;
        tols.tol_p = tol;
        tols.tol_sv = tol;
        IncrementalPod pod(stream.col(0), weight, tols);
        for (Eigen::Index j = 1; j < stream.cols(); ++j) {
            pod.update(stream.col(j));
        }
        pod.finalize();

        const CompressedTrajectory state = pod.compressed();
        const Eigen::MatrixXd reconstructed =
            state.left_basis * state.singular_values.asDiagonal() * state.right_vectors.transpose();
        const double exact_error = std::sqrt(hs_norm_sq(stream - reconstructed, weight));
        const double bound = state.error_bound();
        if (exact_error > bound && exact_error > 1e-12) {
            throw InvariantFailureError("ipod-bench: exact error exceeds the incremental bound");
        }
        json row;
        row["tol"] = tol;
        row["exact_error"] = exact_error;
        row["bound"] = bound;
        row["modes"] = static_cast<long>(state.rank());
        row["saved_memory_pct"] =
            100.0 * (1.0 - static_cast<double>(state.rank()) / static_cast<double>(stream.cols()));
        row["energy_ratio"] = state.energy_ratio();
        rows.push_back(row);
    }

    json summary;
    summary["schema_version"] = 1;
    summary["kind"] = kind_name(config.kind);
    summary["bench"] = {{"rows", rows},
                        {"stream", {{"rows", config.bench.rows}, {"cols", config.bench.cols}}}};
    return summary;
}

}  // namespace

ConvergenceSuiteResult run_convergence_suite(const SuiteSection& suite, std::uint64_t seed) {
    ConvergenceSuiteResult result;
    Rng rng(seed);

    double hyp_fraction_sum = 0.0;
    for (int id = 0; id < suite.instances; ++id) {
        const int family_slot = id % 3;
        const int plan_slot = (id / 3) % 5;

        ObjectiveSpec spec;
        const double mu = std::pow(10.0, rng.uniform(-1.5, 0.0));
        const double ratio = std::pow(10.0, rng.uniform(0.3, 2.0));
        if (family_slot == 0) {
            const Eigen::Index dim = rng.uniform_int(2, suite.max_dimension);
            spec = make_spd_quadratic(rng, dim, mu, mu * ratio);
        } else if (family_slot == 1) {
            const Eigen::Index dim = rng.uniform_int(2, suite.max_dimension);
            const Eigen::Index rank = rng.uniform_int(1, dim - 1);
            spec = make_singular_quadratic(rng, dim, rank, mu, mu * ratio);
        } else {
            spec = make_pl_nonconvex_1d();
        }
        const double l = spec.descent_constant;

        Eigen::VectorXd x0 =
            spec.minimizer + rng.uniform(0.5, 5.0) * rng.unit_vector(spec.dimension);
        const int k = static_cast<int>(rng.uniform_int(8, suite.max_iterations));

        double kappa;
        NoisePolicy policy;
        policy.seed = rng.raw();
        const bool exact_step_plan = (plan_slot == 4);
        if (exact_step_plan) {
            kappa = 1.0 / l;
            policy.mode = NoiseMode::adversarial_opposing;
            policy.epsilon = 0.1 * spec.gradient(x0).norm();
        } else {
            kappa = rng.uniform(0.05, 0.95) / l;
            if (plan_slot == 0) {
                policy.mode = NoiseMode::fixed_magnitude_random_direction;
                policy.epsilon = 0.0;
            } else if (plan_slot == 3) {
                policy.mode = NoiseMode::threshold_fraction;
                policy.fraction = suite.noise_fraction;
                policy.epsilon = std::numeric_limits<double>::infinity();
            } else {
                // Calibrate the magnitude from an exact rehearsal so the
                // threshold hypothesis holds along the whole noisy run.
                NoisePolicy silent;
                silent.epsilon = 0.0;
                const GdTrace rehearsal = inexact_gd(spec, kappa, silent, k, x0);
                double min_threshold = std::numeric_limits<double>::infinity();
                for (double g : rehearsal.gradient_norms) {
                    min_threshold = std::min(min_threshold, descent_threshold(g, kappa, l));
                }
                policy.mode = (plan_slot == 1) ? NoiseMode::fixed_magnitude_random_direction
                                               : NoiseMode::adversarial_opposing;
                policy.epsilon = 0.45 * min_threshold;
                if (!(policy.epsilon > 0.0)) {
                    policy.epsilon = 0.0;
                    policy.mode = NoiseMode::fixed_magnitude_random_direction;
                }
            }
        }

        const GdTrace trace = inexact_gd(spec, kappa, policy, k, x0);
        const double measured_eps =
            trace.noise_norms.empty()
                ? 0.0
                : *std::max_element(trace.noise_norms.begin(), trace.noise_norms.end());

        const double j0_gap = trace.objectives.front() - spec.optimal_value;
        const double d0 = (trace.iterates.front() - spec.nearest_minimizer(x0)).norm();
        const double margin_slack = 1e-8 * (1.0 + std::abs(j0_gap) + d0 * d0);

        SuiteInstanceRow row;
        row.id = id;
        row.family = family_slot == 0 ? "strongly-convex"
                     : family_slot == 1 ? "convex-singular"
                                        : "pl-nonconvex";
        row.kappa = kappa;
        row.epsilon = measured_eps;

        double min_fraction = 1.0;
        const bool strict_step = !exact_step_plan && kappa * l < 1.0 - 1e-9;
        if (spec.is_convex() && strict_step) {
            const BoundCheckReport report = check_convex_bound(trace, spec, kappa, measured_eps);
            if (report.domain_ok && report.asserted_points > 0) {
                row.margin_convex = report.worst_margin;
                result.asserted_points += report.asserted_points;
                result.worst_margin_convex =
                    std::max(result.worst_margin_convex, report.worst_margin);
                if (report.worst_margin > margin_slack) {
                    ++result.bound_violations;
                }
                min_fraction = std::min(min_fraction, report.hypothesis_fraction());
            }
        }
        {
            const BoundCheckReport report = check_pl_bounds(trace, spec, kappa, measured_eps);
            if (report.domain_ok && report.asserted_points > 0) {
                row.margin_pl = report.worst_margin;
                result.asserted_points += report.asserted_points;
                result.worst_margin_pl = std::max(result.worst_margin_pl, report.worst_margin);
                if (report.worst_margin > margin_slack) {
                    ++result.bound_violations;
                }
                min_fraction = std::min(min_fraction, report.hypothesis_fraction());
            }
        }
        if (spec.is_strongly_convex() && strict_step) {
            const BoundCheckReport report = check_sc_bound(trace, spec, kappa, measured_eps);
            if (report.asserted_points > 0) {
                row.margin_sc = report.worst_margin;
                result.asserted_points += report.asserted_points;
                result.worst_margin_sc = std::max(result.worst_margin_sc, report.worst_margin);
                if (report.worst_margin > margin_slack) {
                    ++result.bound_violations;
                }
            }
        }

        // Decrease property at every threshold-satisfying step (kappa < 1/L).
        if (strict_step) {
            for (int i = 0; i < trace.steps(); ++i) {
                const double threshold =
                    descent_threshold(trace.gradient_norms[static_cast<std::size_t>(i)], kappa, l);
                if (trace.noise_norms[static_cast<std::size_t>(i)] < threshold) {
                    ++result.threshold_steps;
                    const double before = trace.objectives[static_cast<std::size_t>(i)];
                    const double after = trace.objectives[static_cast<std::size_t>(i) + 1];
                    if (!(after < before + 1e-12 * (1.0 + std::abs(before)))) {
                        ++result.decrease_violations;
                    }
                }
            }
        }

        // Gradient dominance |grad|^2 / (2L) <= J - inf J at every iterate.
        for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
            const double gap = trace.objectives[i] - spec.optimal_value;
            const double lhs = spec.gradient(trace.iterates[i]).squaredNorm() / (2.0 * l);
            ++result.gradient_dominance_checks;
            if (lhs > gap + 1e-9 * (1.0 + std::abs(gap))) {
                ++result.gradient_dominance_violations;
            }
        }

        row.hyp_fraction = min_fraction;
        hyp_fraction_sum += min_fraction;
        result.rows.push_back(std::move(row));
        ++result.instances;
    }
    result.aggregate_hypothesis_fraction =
        result.instances == 0 ? 1.0 : hyp_fraction_sum / result.instances;
    return result;
}

namespace {

void write_suite_csv(const fs::path& path, const std::vector<SuiteInstanceRow>& rows,
                     double SuiteInstanceRow::*margin) {
    std::ostringstream out;
    out << "instance,family,kappa,epsilon,worst_margin,hyp_fraction\n";
    for (const SuiteInstanceRow& row : rows) {
        const double value = row.*margin;
        if (std::isnan(value)) {
            continue;
        }
        out << row.id << ',' << row.family << ',' << g17(row.kappa) << ',' << g17(row.epsilon)
            << ',' << g17(value) << ',' << g17(row.hyp_fraction) << '\n';
    }
    write_text_file(path, out.str());
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const fs::path dir = config.resolved_output_dir();
    fs::create_directories(dir);
    write_text_file(dir / "config.normalized.json", config.normalized_json());

    json summary;
    if (is_assimilation(config.kind)) {
        AssimilationArtifacts artifacts = run_assimilation(config);
        summary = std::move(artifacts.summary);
        for (const auto& [name, records] : artifacts.records) {
            write_iteration_csv(dir / ("iterations_" + name + ".csv"), records,
                                name == "inexact");
            if (name == "inexact") {
                write_ledger_csv(dir / "ledger_inexact.csv", records);
            }
        }
        for (const auto& [name, u0] : artifacts.final_u0) {
            write_trajectory_binary((dir / ("final_u0_" + name + ".bin")).string(), u0,
                                    artifacts.tau);
        }
        if (artifacts.final_state) {
            artifacts.final_state->save((dir / "final_state_inexact.bin").string());
            // Left basis in matrix market form for offline inspection.
            write_matrix_market((dir / "pod_basis_inexact.mtx").string(),
                                artifacts.final_state->left_basis);
        }
    } else if (config.kind == ExperimentKind::ipod_bench) {
        summary = run_bench(config);
        std::ostringstream csv;
        csv << "tol,exact_error,bound,ratio,modes,saved_memory_pct\n";
        for (const json& row : summary.at("bench").at("rows")) {
            const double exact = row.at("exact_error").get<double>();
            const double bound = row.at("bound").get<double>();
            csv << g17(row.at("tol").get<double>()) << ',' << g17(exact) << ',' << g17(bound)
                << ',';
            if (exact > 0.0) {
                csv << g17(bound / exact);
            }
            csv << ',' << row.at("modes").get<long>() << ','
                << g17(row.at("saved_memory_pct").get<double>()) << '\n';
        }
        write_text_file(dir / "bench.csv", csv.str());
    } else {
        const ConvergenceSuiteResult suite = run_convergence_suite(config.suite, config.seed);
        if (suite.bound_violations > 0 || suite.decrease_violations > 0 ||
            suite.gradient_dominance_violations > 0) {
            throw InvariantFailureError("convergence-suite: bound or decrease violations detected");
        }
        write_suite_csv(dir / "margins_convex.csv", suite.rows, &SuiteInstanceRow::margin_convex);
        write_suite_csv(dir / "margins_pl.csv", suite.rows, &SuiteInstanceRow::margin_pl);
        write_suite_csv(dir / "margins_sc.csv", suite.rows, &SuiteInstanceRow::margin_sc);
        summary["schema_version"] = 1;
        summary["kind"] = kind_name(config.kind);
        summary["suite"] = {
            {"instances", suite.instances},
            {"asserted_points", suite.asserted_points},
            {"bound_violations", suite.bound_violations},
            {"threshold_steps", suite.threshold_steps},
            {"decrease_violations", suite.decrease_violations},
            {"gradient_dominance_checks", suite.gradient_dominance_checks},
            {"gradient_dominance_violations", suite.gradient_dominance_violations},
            {"aggregate_hypothesis_fraction", suite.aggregate_hypothesis_fraction},
            {"worst_margin_convex", suite.worst_margin_convex},
            {"worst_margin_pl", suite.worst_margin_pl},
            {"worst_margin_sc", suite.worst_margin_sc}};
    }

    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    const std::string text = render_summary_json(summary);
    write_text_file(dir / "summary.txt", text);

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ostringstream log;
    log << "experiment " << kind_name(config.kind) << " finished in " << elapsed << " s\n";
    write_text_file(dir / "run.log", log.str());

    return RunOutcome{dir.string(), text};
}

std::string render_summary(const std::string& run_dir) {
    const fs::path path = fs::path(run_dir) / "summary.json";
    if (!fs::exists(path)) {
        throw std::runtime_error("summarize: no summary.json in " + run_dir);
    }
    return render_summary_json(load_json_file(path));
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base,
                                           const std::string& base_json_text,
                                           const std::vector<std::string>& params) {
    json root;
    try {
        root = json::parse(base_json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep: cannot parse base config: ") + e.what());
    }

    struct Axis {
        std::string pointer;
        std::string label;
        std::vector<json> values;
    };
    std::vector<Axis> axes;
    for (const std::string& param : params) {
        const auto eq = param.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == param.size()) {
            throw ConfigError("sweep: --param expects key=v1,v2,..., got \"" + param + "\"");
        }
        Axis axis;
        axis.label = param.substr(0, eq);
        axis.pointer = "/" + axis.label;
        for (std::size_t pos = 0; pos < axis.pointer.size(); ++pos) {
            if (axis.pointer[pos] == '.') {
                axis.pointer[pos] = '/';
            }
        }
        std::istringstream values(param.substr(eq + 1));
        std::string token;
        while (std::getline(values, token, ',')) {
            try {
                axis.values.push_back(json::parse(token));
            } catch (const json::exception&) {
                axis.values.push_back(json(token));  // plain string value
            }
        }
        if (axis.values.empty()) {
            throw ConfigError("sweep: no values for \"" + axis.label + "\"");
        }
        axes.push_back(std::move(axis));
    }

    std::vector<ExperimentConfig> configs;
    std::vector<std::size_t> index(axes.size(), 0);
    while (true) {
        json derived = root;
        std::string suffix;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const json& value = axes[a].values[index[a]];
            try {
                derived[json::json_pointer(axes[a].pointer)] = value;
            } catch (const json::exception& e) {
                throw ConfigError("sweep: cannot set \"" + axes[a].label + "\": " + e.what());
            }
            if (!suffix.empty()) {
                suffix += "_";
            }
            suffix += axes[a].label + "=" +
                      (value.is_string() ? value.get<std::string>() : value.dump());
        }
        derived["output_dir"] = base.output_dir + "/" + suffix;
        configs.push_back(ExperimentConfig::from_json_text(derived.dump()));

        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++index[a] < axes[a].values.size()) {
                break;
            }
            index[a] = 0;
        }
        if (a == axes.size()) {
            break;
        }
    }
    return configs;
}

std::vector<int> run_sweep(const std::vector<ExperimentConfig>& configs, int jobs) {
    std::vector<int> codes(configs.size(), 0);
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= configs.size()) {
                    return;
                }
                try {
                    run_experiment(configs[i]);
                    codes[i] = 0;
                } catch (const ConfigError&) {
                    codes[i] = 2;
                } catch (const InvariantFailureError&) {
                    codes[i] = 3;
                } catch (const std::exception&) {
                    codes[i] = 1;
                }
            }
        });
    }
    for (std::thread& t : threads) {
        t.join();
    }
    return codes;
}

}  // namespace ipod
