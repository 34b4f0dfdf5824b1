#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mfgc/cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace mfgc::cli;

    CLI::App app{"Mean field games of controls on the torus"};
    app.require_subcommand(1);
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--threads", threads, "Cap on concurrent sweep runs")->check(CLI::PositiveNumber);

    std::string config;
    auto* solve = app.add_subcommand("solve", "Solve one configuration");
    solve->add_option("config", config, "TOML config")->required();

    std::string key, values;
    auto* sweep = app.add_subcommand("sweep", "Independent solves over one numeric key");
    sweep->add_option("config", config, "TOML config")->required();
    sweep->add_option("--param", key, "Dotted config key, e.g. model.eps")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--threads", threads, "Cap on concurrent runs")->check(CLI::PositiveNumber);

    CheckOptions check_opts;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    auto* check = app.add_subcommand("check", "Sample the structural assumptions");
    check->add_option("config", config, "TOML config")->required();
    auto* samples_opt = check->add_option("--samples", samples, "Number of samples");
    auto* seed_opt = check->add_option("--seed", seed, "Sampler seed");
    check->add_option("--h4", check_opts.h4_tuples, "Also sweep the kernel-gradient positivity bound over this many tuples");

    std::string run_dir;
    auto* diag = app.add_subcommand("diagnose", "Recompute diagnostics for a finished run");
    diag->add_option("run-dir", run_dir, "Directory holding summary.json and the field CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors share the config-error exit status.
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    if (*solve) return cmd_solve(config, std::cout, std::cerr);
    if (*sweep) {
        std::vector<double> list;
        try {
            list = parse_value_list(values);
        } catch (const std::exception& e) {
            std::cerr << "sweep: --values: " << e.what() << "\n";
            return kExitConfigError;
        }
        return cmd_sweep(config, key, list, threads, std::cout, std::cerr);
    }
    if (*check) {
        if (*samples_opt) check_opts.samples = samples;
        if (*seed_opt) check_opts.seed = seed;
        return cmd_check(config, check_opts, std::cout, std::cerr);
    }
    if (*diag) return cmd_diagnose(run_dir, std::cout, std::cerr);
    return kExitConfigError;
}
