#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "warm/parallel.hpp"
#include "warm/rng.hpp"
#include "warm/tensor.hpp"
#include "warm/world.hpp"

namespace warm {

// Two-layer scalar-head network: r(x) = head . relu(W1 x + b1) + bias.
struct NetShape {
    int input_dim = 0;
    int hidden = 0;

    void validate() const;
    std::size_t param_count() const {
        const auto in = static_cast<std::size_t>(input_dim);
        const auto h = static_cast<std::size_t>(hidden);
        return h * in + h + h + 1;
    }
    bool operator==(const NetShape&) const = default;
};

// Flat parameter vector, layout: W1 (hidden x input, row-major), b1, head, bias.
struct Weights {
    NetShape shape;
    Vec values;

    static Weights zeros(const NetShape& shape);
    static Weights random_init(const NetShape& shape, RngState& rng);

    std::span<double> w1() { return {values.data(), w1_size()}; }
    std::span<const double> w1() const { return {values.data(), w1_size()}; }
    std::span<double> b1() { return {values.data() + w1_size(), h()}; }
    std::span<const double> b1() const { return {values.data() + w1_size(), h()}; }
    std::span<double> head() { return {values.data() + w1_size() + h(), h()}; }
    std::span<const double> head() const { return {values.data() + w1_size() + h(), h()}; }
    double& bias() { return values.back(); }
    double bias() const { return values.back(); }

    // Featurizer = everything but the head and bias.
    std::size_t featurizer_size() const { return w1_size() + h(); }

private:
    std::size_t h() const { return static_cast<std::size_t>(shape.hidden); }
    std::size_t w1_size() const {
        return static_cast<std::size_t>(shape.hidden) * static_cast<std::size_t>(shape.input_dim);
    }
};

double forward(const Weights& w, const Item& item);

struct BatchResult {
    double loss = 0.0;
    Vec grad;
};

// Mean Bradley-Terry loss and gradient over a batch:
//   loss = -mean log sigmoid(r(preferred) - r(rejected)).
// One dropout mask per pair, shared between the pair's two items, inverted
// scaling (1/(1-p)) so inference needs no correction. The reduction runs in
// fixed-size chunks combined in order: Serial and Parallel produce identical
// bits for any thread count.
BatchResult bt_loss_grad(const Weights& w, std::span<const PreferencePair> batch,
                         double dropout_p, RngState& rng, Exec exec = Exec::Parallel);

struct TrainLogRow {
    int step = 0;
    double loss = 0.0;
    double id_val_acc = 0.0;
};

using TrainLog = std::vector<TrainLogRow>;

struct Checkpoint {
    Weights weights;
    int step = 0;
    std::uint64_t trajectory_id = 0;
};

struct TrainConfig {
    double learning_rate = 4e-3;
    double dropout_p = 0.05;
    int steps = 2000;
    int batch_size = 32;
    std::uint64_t data_order_seed = 0;
    int init_checkpoint_id = 0;
    enum class ProbeMode { LinearProbe, RandomHead } probe_mode = ProbeMode::LinearProbe;
    int eval_interval = 100;
    std::vector<int> snapshot_steps;  // optional mid-run checkpoints

    void validate() const;
};

struct TrainResult {
    Weights weights;
    TrainLog log;
    std::vector<Checkpoint> snapshots;
};

// Plain SGD on the BT loss over the train-split pairs of `data`, epoch-wise
// shuffles seeded by cfg.data_order_seed, ID-val accuracy logged every
// eval_interval steps. Deterministic: identical cfg + data reproduce the
// final weights bit for bit.
TrainResult train_rm(const Weights& init, const TrainConfig& cfg,
                     std::span<const PreferencePair> data);

struct PretrainOptions {
    double learning_rate = 1e-2;
    int batch_size = 64;
};

// Trains featurizer + head from random init on a clean auxiliary pairwise
// split, snapshotting at the requested steps (the inits Baklava picks from).
std::vector<Checkpoint> pretrain_trajectory(const NetShape& shape,
                                            std::span<const PreferencePair> data, int steps,
                                            std::span<const int> snapshot_steps, RngState& rng,
                                            const PretrainOptions& opts = {});

// Fits the head on frozen features by full-batch gradient descent on the BT
// loss. The featurizer block of the result is bit-identical to the
// checkpoint's. steps = 0 returns the head unchanged.
Weights linear_probe(const Checkpoint& ckpt, std::span<const PreferencePair> data,
                     int steps = 300, double learning_rate = 0.5);

// Weight file: {"shape": {...}, "layout": "...", "values": [...]} with
// 17-significant-digit floats.
void write_weights_json(const std::filesystem::path& path, const Weights& w);
Weights read_weights_json(const std::filesystem::path& path);

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log);

}  // namespace warm
