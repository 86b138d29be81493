#include "warm/reward_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "warm/errors.hpp"
#include "warm/io.hpp"

namespace warm {

void NetShape::validate() const {
    if (input_dim < 1) throw std::invalid_argument("NetShape: input_dim must be >= 1");
    if (hidden < 1) throw std::invalid_argument("NetShape: hidden must be >= 1");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw std::invalid_argument("TrainConfig: dropout_p must be in [0,1)");
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (eval_interval < 1) throw std::invalid_argument("TrainConfig: eval_interval must be >= 1");
}

Weights Weights::zeros(const NetShape& shape) {
    shape.validate();
    Weights w;
    w.shape = shape;
    w.values.assign(shape.param_count(), 0.0);
    return w;
}

Weights Weights::random_init(const NetShape& shape, RngState& rng) {
    Weights w = zeros(shape);
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(shape.input_dim));
    for (auto& v : w.w1()) v = w1_scale * rng.gaussian();
    const double head_scale = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    for (auto& v : w.head()) v = head_scale * rng.gaussian();
    return w;
}

double forward(const Weights& w, const Item& item) {
    const auto in = static_cast<std::size_t>(w.shape.input_dim);
    const auto h = static_cast<std::size_t>(w.shape.hidden);
    if (item.x.size() != in) throw std::invalid_argument("forward: input dimension mismatch");
    std::span<const double> w1 = w.w1();
    std::span<const double> b1 = w.b1();
    std::span<const double> head = w.head();
    double r = w.bias();
    for (std::size_t i = 0; i < h; ++i) {
        const double u = dot({w1.data() + i * in, in}, item.x) + b1[i];
        if (u > 0.0) r += head[i] * u;
    }
    return r;
}

namespace {

// -log sigmoid(m), stable on both tails.
double softplus_neg(double m) {
    return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// sigmoid(-m) = d/dm of the loss above, negated.
double sigmoid_neg(double m) {
    if (m > 0.0) {
        const double e = std::exp(-m);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(m));
}

struct ItemForward {
    Vec hidden;      // post-ReLU, post-dropout activations
    Vec relu_mask;   // 1 where pre-activation > 0
    double reward = 0.0;
};

ItemForward forward_train(const Weights& w, const Item& item, const Vec& drop_scale) {
    const auto in = static_cast<std::size_t>(w.shape.input_dim);
    const auto h = static_cast<std::size_t>(w.shape.hidden);
    if (item.x.size() != in) throw std::invalid_argument("bt_loss_grad: input dimension mismatch");
    std::span<const double> w1 = w.w1();
    std::span<const double> b1 = w.b1();
    std::span<const double> head = w.head();
    ItemForward f;
    f.hidden.assign(h, 0.0);
    f.relu_mask.assign(h, 0.0);
    f.reward = w.bias();
    for (std::size_t i = 0; i < h; ++i) {
        const double u = dot({w1.data() + i * in, in}, item.x) + b1[i];
        if (u > 0.0) {
            f.relu_mask[i] = 1.0;
            f.hidden[i] = u * drop_scale[i];
            f.reward += head[i] * f.hidden[i];
        }
    }
    return f;
}

// Adds coef * d r / d theta for one item into grad.
void accumulate_item_grad(const Weights& w, const Item& item, const ItemForward& f,
                          const Vec& drop_scale, double coef, Vec& grad) {
    const auto in = static_cast<std::size_t>(w.shape.input_dim);
    const auto h = static_cast<std::size_t>(w.shape.hidden);
    std::span<const double> head = w.head();
    double* gw1 = grad.data();
    double* gb1 = grad.data() + h * in;
    double* ghead = grad.data() + h * in + h;
    double& gbias = grad.back();
    for (std::size_t i = 0; i < h; ++i) {
        if (f.relu_mask[i] == 0.0) continue;
        ghead[i] += coef * f.hidden[i];
        const double back = coef * head[i] * drop_scale[i];
        gb1[i] += back;
        axpy(back, item.x, {gw1 + i * in, in});
    }
    gbias += coef;
}

}  // namespace

BatchResult bt_loss_grad(const Weights& w, std::span<const PreferencePair> batch,
                         double dropout_p, RngState& rng, Exec exec) {
    if (batch.empty()) throw std::invalid_argument("bt_loss_grad: batch must be nonempty");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw std::invalid_argument("bt_loss_grad: dropout_p must be in [0,1)");
    const std::size_t n = batch.size();
    const std::size_t n_params = w.shape.param_count();
    const auto h = static_cast<std::size_t>(w.shape.hidden);
    const std::size_t nc = chunk_count(n);

    std::vector<Vec> grad_parts(nc);
    Vec loss_parts(nc, 0.0);
    std::vector<std::size_t> bad_pair(nc, n);  // index of first non-finite pair, n = none

    for_chunks(n, exec, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Vec& grad = grad_parts[c];
        grad.assign(n_params, 0.0);
        Vec drop_scale(h, 1.0);
        for (std::size_t k = begin; k < end; ++k) {
            const PreferencePair& pair = batch[k];
            if (dropout_p > 0.0) {
                // One mask per pair, shared by both items.
                RngState mask_rng = rng.substream(k);
                const double keep = 1.0 - dropout_p;
                for (std::size_t i = 0; i < h; ++i) {
                    drop_scale[i] = mask_rng.uniform() < dropout_p ? 0.0 : 1.0 / keep;
                }
            }
            const ItemForward fp = forward_train(w, pair.labeled_preferred(), drop_scale);
            const ItemForward fr = forward_train(w, pair.labeled_rejected(), drop_scale);
            const double margin = fp.reward - fr.reward;
            const double loss = softplus_neg(margin);
            if (!std::isfinite(loss)) {
                if (bad_pair[c] == n) bad_pair[c] = k;
                continue;
            }
            loss_parts[c] += loss;
            const double coef = -sigmoid_neg(margin);
            accumulate_item_grad(w, pair.labeled_preferred(), fp, drop_scale, coef, grad);
            accumulate_item_grad(w, pair.labeled_rejected(), fr, drop_scale, -coef, grad);
        }
    });

    for (std::size_t c = 0; c < nc; ++c) {
        if (bad_pair[c] != n) {
            throw numerical_error("bt_loss_grad: non-finite loss at batch index " +
                                  std::to_string(bad_pair[c]));
        }
    }

    BatchResult out;
    out.grad.assign(n_params, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        out.loss += loss_parts[c];
        for (std::size_t i = 0; i < n_params; ++i) out.grad[i] += grad_parts[c][i];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    out.loss *= inv_n;
    for (auto& g : out.grad) g *= inv_n;
    return out;
}

namespace {

double id_val_accuracy(const Weights& w, std::span<const PreferencePair> id_val);

struct Sgd {
    Weights w;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    RngState order_rng;
    RngState dropout_rng;

    void reshuffle() {
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = order_rng.next_u64() % i;
            std::swap(order[i - 1], order[j]);
        }
        cursor = 0;
    }

    std::vector<PreferencePair> next_batch(std::span<const PreferencePair> data,
                                           std::size_t batch_size) {
        std::vector<PreferencePair> batch;
        batch.reserve(batch_size);
        for (std::size_t k = 0; k < batch_size; ++k) {
            if (cursor >= order.size()) reshuffle();
            batch.push_back(data[train_idx[order[cursor++]]]);
        }
        return batch;
    }
};

double id_val_accuracy(const Weights& w, std::span<const PreferencePair> id_val) {
    if (id_val.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& pair : id_val) {
        if (forward(w, pair.labeled_preferred()) >= forward(w, pair.labeled_rejected())) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(id_val.size());
}

std::uint64_t derive_trajectory_id(RngState rng) { return rng.next_u64(); }

}  // namespace

TrainResult train_rm(const Weights& init, const TrainConfig& cfg,
                     std::span<const PreferencePair> data) {
    cfg.validate();
    std::vector<std::size_t> train_idx;
    std::vector<PreferencePair> id_val;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (is_train(data[i].subset)) train_idx.push_back(i);
        if (data[i].subset == SubsetTag::IdVal) id_val.push_back(data[i]);
    }
    if (train_idx.empty()) throw std::invalid_argument("train_rm: data has no train split");

    RngState root = RngState::from_seed(cfg.data_order_seed, /*stream=*/0xf17e);
    auto [order_rng, dropout_rng] = root.split();

    Sgd sgd;
    sgd.w = init;
    sgd.train_idx = std::move(train_idx);
    sgd.order.resize(sgd.train_idx.size());
    std::iota(sgd.order.begin(), sgd.order.end(), 0);
    sgd.order_rng = order_rng;
    sgd.dropout_rng = dropout_rng;
    sgd.reshuffle();

    std::vector<int> snaps = cfg.snapshot_steps;
    std::sort(snaps.begin(), snaps.end());
    const std::uint64_t traj_id = derive_trajectory_id(sgd.dropout_rng.substream(0x7261));

    TrainResult out;
    for (int step = 1; step <= cfg.steps; ++step) {
        const auto batch = sgd.next_batch(data, static_cast<std::size_t>(cfg.batch_size));
        RngState step_rng = sgd.dropout_rng.substream(static_cast<std::uint64_t>(step));
        BatchResult res;
        try {
            res = bt_loss_grad(sgd.w, batch, cfg.dropout_p, step_rng);
        } catch (const numerical_error& e) {
            throw numerical_error("train_rm: diverged at step " + std::to_string(step) + " (" +
                                  e.what() + ")");
        }
        axpy(-cfg.learning_rate, res.grad, sgd.w.values);

        if (step % cfg.eval_interval == 0 || step == cfg.steps) {
            out.log.push_back({step, res.loss, id_val_accuracy(sgd.w, id_val)});
        }
        if (std::binary_search(snaps.begin(), snaps.end(), step)) {
            out.snapshots.push_back({sgd.w, step, traj_id});
        }
    }
    out.weights = std::move(sgd.w);
    return out;
}

std::vector<Checkpoint> pretrain_trajectory(const NetShape& shape,
                                            std::span<const PreferencePair> data, int steps,
                                            std::span<const int> snapshot_steps, RngState& rng,
                                            const PretrainOptions& opts) {
    shape.validate();
    if (snapshot_steps.empty()) {
        throw std::invalid_argument("pretrain_trajectory: snapshot list must be nonempty");
    }
    for (int s : snapshot_steps) {
        if (s < 1 || s > steps) {
            throw std::invalid_argument("pretrain_trajectory: snapshot step " + std::to_string(s) +
                                        " outside [1, steps]");
        }
    }
    if (data.empty()) throw std::invalid_argument("pretrain_trajectory: data must be nonempty");

    Weights w = Weights::random_init(shape, rng);
    TrainConfig cfg;
    cfg.learning_rate = opts.learning_rate;
    cfg.dropout_p = 0.0;
    cfg.steps = steps;
    cfg.batch_size = opts.batch_size;
    cfg.data_order_seed = rng.next_u64();
    cfg.eval_interval = steps;  // no intermediate logging needed
    cfg.snapshot_steps.assign(snapshot_steps.begin(), snapshot_steps.end());

    TrainResult res = train_rm(w, cfg, data);
    // Snapshots come back ordered by step; the trajectory id ties them together.
    return std::move(res.snapshots);
}

Weights linear_probe(const Checkpoint& ckpt, std::span<const PreferencePair> data, int steps,
                     double learning_rate) {
    if (data.empty()) throw std::invalid_argument("linear_probe: data must be nonempty");
    if (steps < 0) throw std::invalid_argument("linear_probe: steps must be >= 0");
    const Weights& base = ckpt.weights;
    const auto h = static_cast<std::size_t>(base.shape.hidden);

    // Frozen featurizer: per-pair hidden activations are fixed, so precompute
    // the margins' feature differences once.
    std::vector<Vec> delta_h;
    delta_h.reserve(data.size());
    for (const auto& pair : data) {
        if (!is_train(pair.subset)) continue;
        Vec dh(h, 0.0);
        const auto fp = [&](const Item& item) {
            Vec hid(h, 0.0);
            const auto in = static_cast<std::size_t>(base.shape.input_dim);
            std::span<const double> w1 = base.w1();
            std::span<const double> b1 = base.b1();
            for (std::size_t i = 0; i < h; ++i) {
                const double u = dot({w1.data() + i * in, in}, item.x) + b1[i];
                hid[i] = u > 0.0 ? u : 0.0;
            }
            return hid;
        };
        const Vec hp = fp(pair.labeled_preferred());
        const Vec hr = fp(pair.labeled_rejected());
        for (std::size_t i = 0; i < h; ++i) dh[i] = hp[i] - hr[i];
        delta_h.push_back(std::move(dh));
    }
    if (delta_h.empty()) throw std::invalid_argument("linear_probe: data has no train split");

    Weights out = base;
    std::span<double> head = out.head();
    const double inv_n = 1.0 / static_cast<double>(delta_h.size());
    for (int step = 0; step < steps; ++step) {
        Vec grad(h, 0.0);
        for (const Vec& dh : delta_h) {
            const double margin = dot(head, dh);
            axpy(-sigmoid_neg(margin), dh, grad);
        }
        axpy(-learning_rate * inv_n, grad, head);
    }
    return out;
}

void write_weights_json(const std::filesystem::path& path, const Weights& w) {
    std::string out = "{\"shape\":{\"input_dim\":" + std::to_string(w.shape.input_dim) +
                      ",\"hidden\":" + std::to_string(w.shape.hidden) +
                      "},\"layout\":\"w1,b1,head,bias\",\"values\":[";
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        if (i) out += ',';
        out += format_g17(w.values[i]);
    }
    out += "]}\n";
    write_text_file(path, out);
}

Weights read_weights_json(const std::filesystem::path& path) {
    const nlohmann::json doc = nlohmann::json::parse(read_text_file(path));
    NetShape shape;
    shape.input_dim = doc.at("shape").at("input_dim").get<int>();
    shape.hidden = doc.at("shape").at("hidden").get<int>();
    Weights w = Weights::zeros(shape);
    w.values = doc.at("values").get<Vec>();
    if (w.values.size() != shape.param_count()) {
        throw std::invalid_argument("read_weights_json: value count does not match shape");
    }
    return w;
}

void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    CsvTable table;
    table.header = {"step", "loss", "id_val_acc"};
    for (const auto& row : log) {
        table.rows.push_back({std::to_string(row.step), format_g17(row.loss),
                              format_g17(row.id_val_acc)});
    }
    table.write(path);
}

}  // namespace warm
