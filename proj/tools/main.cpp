#include "rpme/config.hpp"
#include "rpme/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"rpme - porous medium equations driven by rough multiplicative signals"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::string describe_name;
    int threads = 0;
    long long seed = -1;

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--threads", threads, "worker threads (0 = all cores)");

    auto* list = app.add_subcommand("list-experiments", "list the named experiment suites");
    auto* describe = app.add_subcommand("describe", "describe one experiment suite");
    describe->add_option("name", describe_name, "suite name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& name : rpme::experiment_names()) std::cout << name << "\n";
            return 0;
        }
        if (describe->parsed()) {
            std::cout << describe_name << ": " << rpme::describe_experiment(describe_name) << "\n";
            return 0;
        }
        rpme::ExperimentConfig cfg = rpme::ExperimentConfig::parse_file(config_path);
        if (seed >= 0) cfg.set("run.seed", std::to_string(seed));
        return rpme::run_experiment(cfg, out_dir, threads);
    } catch (const rpme::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
