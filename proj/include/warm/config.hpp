#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "warm/tensor.hpp"
#include "warm/world.hpp"

namespace warm {

// Experiment knobs, one block per stage. All defaults are the desk-scale
// recipe; a config file overrides individual fields and everything else is
// echoed back normalized.
struct PretrainBlock {
    int n_pairs = 2048;
    int steps = 1200;
    std::vector<int> snapshot_steps = {800, 1000, 1200};
    double learning_rate = 1e-2;
    int batch_size = 64;
    // Pretrain split is drawn at reduced noise: an easy, clean warmup task.
    double sigma_scale = 0.5;
};

struct FinetuneBlock {
    int n_train = 4096;
    int n_id_val = 1024;
    int n_ood = 2000;
    int steps = 2000;
    // The corruption experiment trains into the memorization regime, which
    // needs a longer schedule than the standard recipe.
    int corrupt_steps = 6000;
    int batch_size = 32;
    std::vector<double> learning_rates = {3e-2, 1e-2, 3e-3};
    std::vector<double> dropouts = {0.05, 0.1};
    int n_runs = 10;
    int eval_interval = 100;
    int probe_steps = 300;
    double probe_lr = 0.5;
    int hidden = 32;
};

struct CombineBlock {
    int lambda_points = 11;
    int n_rm_pairs = 10;  // disjoint pairs evaluated by exp-corrupt
    int n_lmc_pairs = 5;
};

struct TheoryBlock {
    Vec p = {1.0, 0.5};
    Vec norms = {1.0, 1.0};
    int feature_dim = 4;
    double sigma = 0.0;
    std::uint64_t members = 4096;
    std::uint64_t n_items = 8;
};

struct BonBlock {
    std::vector<int> n_values = {1, 2, 4, 8, 16, 32, 64};
    int n_prompts = 200;
    std::uint64_t kl_pool = 100000;
    int warm_m = 6;
};

struct RlBlock {
    double alpha = 0.003;  // clean-setup default; the corrupt setup uses 0.01
    std::vector<double> ablation_alphas = {0.001, 0.003, 0.01};
    double learning_rate = 0.05;
    int steps = 800;
    int batch_size = 64;
    double baseline_decay = 0.9;
    int eval_interval = 20;
    int warm_m = 6;
    int n_seeds = 5;
    double policy_sigma0 = 0.5;
    double hack_delta = 0.1;
    // World geometry of the hacking experiment: quality leaves a faint trace
    // in the input (small causal norms) while the spurious marker is loud,
    // the way stylistic cues are easier to read than actual merits.
    double causal_norm = 0.5;
    double spur_norm = 1.25;
};

struct ExperimentConfig {
    WorldSpec world = WorldSpec::desk_default();
    double corruption = 0.0;
    PretrainBlock pretrain;
    FinetuneBlock finetune;
    CombineBlock combine;
    TheoryBlock theory;
    BonBlock bon;
    RlBlock rl;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    std::string to_json() const;  // normalized echo, deterministic bytes
};

struct ConfigResult {
    ExperimentConfig config;
    std::vector<std::string> errors;  // "<json-path>: <message>" entries

    bool ok() const { return errors.empty(); }
};

// Parses and validates a config file. Errors are aggregated, not fail-fast;
// on success every default is filled in. An empty JSON object is a valid
// minimal config.
ConfigResult validate_config(const std::filesystem::path& path);
ConfigResult validate_config_text(const std::string& text);

}  // namespace warm
