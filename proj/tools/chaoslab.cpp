#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "chaoslab/explab/run.hpp"

namespace ex = chaoslab::explab;

int main(int argc, char** argv) {
    CLI::App app{"Chaos-expansion experiments: exact moments, Monte-Carlo joint laws and rate fits"};
    std::string experiment, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    bool self_check = false;

    std::vector<std::string> names;
    for (const auto& [name, run] : ex::experiments()) names.push_back(name);
    app.add_option("experiment", experiment, "Experiment to run")->required()->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory for results.csv, manifest.json, samples.bin")->required();
    app.add_option("--seed", seed, "Master seed; overrides a seed entry in the config");
    app.add_flag("--self-check", self_check, "Abort when any oracle disagrees with the production path");
    CLI11_PARSE(app, argc, argv);

    try {
        const ex::Config cfg = ex::Config::load(config_path);
        const std::optional<std::uint64_t> cfg_seed = cfg.get_seed();
        if (!seed && !cfg_seed) throw ex::ConfigError("no seed given: pass --seed or set seed in the config");
        const ex::RunOptions opt{seed ? *seed : *cfg_seed, self_check};
        const ex::RunManifest m = ex::run_experiment(experiment, cfg, opt);
        m.write(out_dir);

        std::printf("%s: %zu rows written to %s\n", experiment.c_str(), m.table.rows().size(), out_dir.c_str());
        for (const auto& s : m.slopes)
            std::printf("  slope %-14s %+.4f +- %.4f (expected %+.4f +- %.2f) %s\n", s.quantity.c_str(), s.fit.slope,
                        s.fit.stderr_, s.expected, s.tolerance, s.within() ? "within" : "OUTSIDE");
        std::size_t failed = 0;
        for (const auto& c : m.checks)
            if (!c.passed) {
                ++failed;
                std::printf("  check %s failed (value %.6g, threshold %.6g)\n", c.name.c_str(), c.value, c.threshold);
            }
        std::printf("  %zu/%zu checks passed\n", m.checks.size() - failed, m.checks.size());
        return 0;
    } catch (const ex::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
