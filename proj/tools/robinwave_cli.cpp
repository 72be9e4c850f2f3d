#include <CLI11.hpp>

#include <iostream>

#include "robinwave/scenario.hpp"

int main(int argc, char** argv) {
    namespace sc = robinwave::scenario;
    CLI::App app{"Scenario runner for the damped Robin wave lab"};
    app.require_subcommand(1);

    sc::RunRequest req;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    run->add_option("config", req.config, "Scenario JSON")->required();
    run->add_option("--out", req.out_dir, "Output directory (overrides output_dir)");
    auto* seed_opt = run->add_option("--seed", seed, "Seed (overrides the config)");

    auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
    validate->add_option("config", req.config, "Scenario JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sc::kConfig;
    }
    if (seed_opt->count() > 0) req.seed = seed;
    req.validate_only = validate->parsed();
    return sc::execute(req);
}
