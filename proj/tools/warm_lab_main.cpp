#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "warm/config.hpp"
#include "warm/presets.hpp"

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int main(int argc, char** argv) {
    CLI::App app{"warm-lab: desk-scale weight-averaged reward model experiments"};
    app.require_subcommand(0);

    std::string config_path;
    std::string out_dir = "out";
    std::string preset;
    std::int64_t seed_override = -1;
    int jobs = 1;
    bool validate_only = false;

    app.add_option("--config", config_path, "experiment config JSON (defaults when omitted)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--preset", preset,
                   "one of exp-lmc, exp-corrupt, exp-theory, exp-select, exp-bon, exp-rl");
    app.add_option("--seed", seed_override, "overrides the first seed in the config");
    app.add_option("--jobs", jobs, "concurrent fine-tunings / RL runs")->check(CLI::PositiveNumber);
    app.add_flag("--validate-only", validate_only, "parse + echo the config, run nothing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    warm::ConfigResult parsed =
        config_path.empty() ? warm::validate_config_text("{}") : warm::validate_config(config_path);
    if (!parsed.ok()) {
        for (const auto& err : parsed.errors) std::cerr << "config error " << err << "\n";
        return 2;
    }
    if (seed_override >= 0) {
        parsed.config.seeds.front() = static_cast<std::uint64_t>(seed_override);
    }
    if (validate_only) {
        std::cout << parsed.config.to_json();
        return 0;
    }
    if (preset.empty()) {
        std::cerr << "usage error: --preset is required (one of";
        for (const auto& name : warm::preset_names()) std::cerr << " " << name;
        std::cerr << ")\n";
        return 2;
    }

    try {
        return warm::run_preset(preset, parsed.config, out_dir, jobs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
