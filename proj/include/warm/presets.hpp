#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "warm/combine.hpp"
#include "warm/config.hpp"
#include "warm/reward_net.hpp"
#include "warm/world.hpp"

namespace warm {

// Everything one seed of the lab generates: world, bank, and the four data
// splits (train already carries corruption tags when cfg.corruption > 0).
struct LabData {
    WorldSpec world;
    FeatureBank bank;
    std::vector<PreferencePair> pretrain;
    std::vector<PreferencePair> train;
    std::vector<PreferencePair> id_val;
    std::vector<PreferencePair> ood;

    std::vector<PreferencePair> train_and_val() const;
    std::vector<PreferencePair> all_subsets() const;
};

LabData make_lab_data(const ExperimentConfig& cfg, std::uint64_t seed);

// Recipe of the RL hacking experiment: proxies are trained on noisy
// preferences (default 25% flips) into the memorization regime, on a world
// whose causal trace is faint next to the spurious marker (rl.causal_norm /
// rl.spur_norm). Used by exp-rl and the acceptance gate.
ExperimentConfig hacking_recipe(ExperimentConfig cfg);

struct TrainedRm {
    Weights weights;
    TrainConfig cfg;
    TrainLog log;
    double id_val_acc = 0.0;
    double ood_acc = 0.0;
};

struct RmPool {
    std::vector<Checkpoint> pretrain_ckpts;
    Weights probed;  // last checkpoint with the shared probed head
    std::vector<TrainedRm> runs;

    // Indices sorted by ID-val accuracy, best first (stable).
    std::vector<std::size_t> ranked_by_val() const;
    Weights init_for(int checkpoint_id) const;  // featurizer of ckpt + shared head
};

// Pretrains once, probes the head once, shares it across all fine-tunings.
RmPool make_pretrained_base(const ExperimentConfig& cfg, const LabData& data,
                            std::uint64_t seed);

// Initial weights for one fine-tuning: the configured checkpoint's
// featurizer plus either the shared probed head or a fresh random one.
Weights pool_init_for_config(const RmPool& pool, const TrainConfig& cfg);

// Grid fine-tunings: run i cycles through learning rates, dropouts and init
// checkpoints, with its own data order. Runs execute across `jobs` workers;
// results are identical for any job count.
void train_pool_runs(RmPool& pool, const ExperimentConfig& cfg, const LabData& data,
                     std::uint64_t seed, int n_runs, int jobs);

// Two fine-tunings that differ only in data order (the minimum-diversity
// pair the interpolation experiments start from).
std::pair<TrainedRm, TrainedRm> train_same_config_pair(const RmPool& pool,
                                                       const ExperimentConfig& cfg,
                                                       const LabData& data, std::uint64_t seed,
                                                       int pair_index, int jobs);

// Output sink that records every file written, for the manifest.
struct OutputTracker {
    std::filesystem::path root;
    std::map<std::string, std::pair<std::size_t, std::string>> files;  // rel -> (bytes, hash)

    explicit OutputTracker(std::filesystem::path dir) : root(std::move(dir)) {}
    void write(const std::string& rel_path, const std::string& content);
    // Records a file a library writer already put under root.
    void track(const std::string& rel_path);
    void write_manifest(const std::string& preset, const ExperimentConfig& cfg);
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"exp-lmc",    "exp-corrupt", "exp-theory",
                                                   "exp-select", "exp-bon",     "exp-rl"};
    return names;
}

// Runs one preset into out_dir, writing its CSV/JSON artifacts plus
// manifest.json. Returns 0 on success, 1 with a named failed check on
// stderr otherwise. Unknown names throw std::invalid_argument (the CLI
// turns that into a usage error).
int run_preset(const std::string& name, const ExperimentConfig& cfg,
               const std::filesystem::path& out_dir, int jobs);

}  // namespace warm
