/******************************************************************************
 * Copyright (c) 2026, the ipodlab developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *****************************************************************************/

// Description: Command line driver. `run` executes one experiment config,
//              `summarize` re-renders the table of a finished run directory,
//              `sweep` fans a config out over parameter values. Exit codes:
//              0 success, 2 configuration error, 3 invariant failure.

#include "ipod/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ipod::ConfigError("config: cannot open " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental POD compression and inexact-gradient assimilation experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string run_dir;
    std::string output_override;
    std::vector<std::string> sweep_params;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());

    CLI::App* run_cmd = app.add_subcommand("run", "execute one experiment config");
    run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("-o,--output", output_override, "override the output directory");

    CLI::App* summarize_cmd =
        app.add_subcommand("summarize", "print the summary table of a run directory");
    summarize_cmd->add_option("dir", run_dir, "run directory")->required();

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "fan one config out over parameter values");
    sweep_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    sweep_cmd
        ->add_option("--param", sweep_params,
                     "dotted-path assignment key=v1,v2,... (repeatable, cartesian product)")
        ->required();
    sweep_cmd->add_option("--jobs", jobs, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed()) {
            const std::string text = slurp(config_path);
            ipod::ExperimentConfig config = ipod::ExperimentConfig::from_json_text(text);
            if (!output_override.empty()) {
                config.output_dir = output_override;
            }
            const ipod::RunOutcome outcome = ipod::run_experiment(config);
            std::cout << outcome.summary_text;
            std::cout << "artifacts: " << outcome.output_dir << '\n';
        } else if (summarize_cmd->parsed()) {
            std::cout << ipod::render_summary(run_dir);
        } else if (sweep_cmd->parsed()) {
            const std::string text = slurp(config_path);
            const ipod::ExperimentConfig base = ipod::ExperimentConfig::from_json_text(text);
            const auto configs = ipod::expand_sweep(base, text, sweep_params);
            const auto codes = ipod::run_sweep(configs, jobs);
            int worst = 0;
            for (std::size_t i = 0; i < configs.size(); ++i) {
                std::cout << configs[i].resolved_output_dir() << ": exit " << codes[i] << '\n';
                worst = std::max(worst, codes[i]);
            }
            return worst;
        }
    } catch (const ipod::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ipod::InvariantFailureError& e) {
        std::cerr << "invariant failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
