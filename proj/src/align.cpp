#include "warm/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "warm/errors.hpp"
#include "warm/io.hpp"

namespace warm {

GaussianPolicy GaussianPolicy::uniform(int features, double sigma0) {
    if (features < 1) throw std::invalid_argument("GaussianPolicy: features must be >= 1");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("GaussianPolicy: sigma0 must be > 0");
    GaussianPolicy p;
    p.mu.assign(static_cast<std::size_t>(features), 0.0);
    p.log_sigma.assign(static_cast<std::size_t>(features), std::log(sigma0));
    return p;
}

double GaussianPolicy::log_density(const Vec& g) const {
    if (g.size() != mu.size()) throw std::invalid_argument("log_density: dimension mismatch");
    double lp = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double ls = log_sigma[j];
        const double z = (g[j] - mu[j]) / std::exp(ls);
        lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    return lp;
}

double gaussian_kl(const GaussianPolicy& pol, const GaussianPolicy& ref) {
    if (pol.mu.size() != ref.mu.size()) {
        throw std::invalid_argument("gaussian_kl: dimension mismatch");
    }
    double kl = 0.0;
    for (std::size_t j = 0; j < pol.mu.size(); ++j) {
        const double sp = std::exp(pol.log_sigma[j]);
        const double sr = std::exp(ref.log_sigma[j]);
        const double dmu = pol.mu[j] - ref.mu[j];
        kl += ref.log_sigma[j] - pol.log_sigma[j] + (sp * sp + dmu * dmu) / (2.0 * sr * sr) - 0.5;
    }
    return kl;
}

namespace {

Vec softmax(const Vec& g) {
    Vec out(g.size());
    const double m = *std::max_element(g.begin(), g.end());
    double z = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        out[j] = std::exp(g[j] - m);
        z += out[j];
    }
    for (auto& v : out) v /= z;
    return out;
}

Vec draw_logits(const GaussianPolicy& pol, RngState& rng) {
    Vec g(pol.mu.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] = pol.mu[j] + std::exp(pol.log_sigma[j]) * rng.gaussian();
    }
    return g;
}

Item item_from_logits(const WorldSpec& world, const FeatureBank& bank, const Vec& g,
                      RngState& rng) {
    Vec alloc = softmax(g);
    for (auto& a : alloc) a *= world.budget;
    return sample_item(world, bank, alloc, /*y=*/1.0, world.sigma_train, rng);
}

}  // namespace

std::vector<Item> policy_sample(const PolicyState& pol, const WorldSpec& world,
                                const FeatureBank& bank, std::size_t n, RngState& rng) {
    if (n < 1) throw std::invalid_argument("policy_sample: n must be >= 1");
    if (pol.policy.mu.size() != static_cast<std::size_t>(world.feature_count)) {
        throw std::invalid_argument("policy_sample: policy dimension must equal F");
    }
    std::vector<Item> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngState ir = rng.substream(i);
        const Vec g = draw_logits(pol.policy, ir);
        items.push_back(item_from_logits(world, bank, g, ir));
    }
    return items;
}

const Item& best_of_n(const ProxyFn& proxy, std::span<const Item> candidates) {
    if (candidates.empty()) throw std::invalid_argument("best_of_n: candidates must be nonempty");
    std::size_t best = 0;
    double best_r = proxy(candidates[0]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double r = proxy(candidates[i]);
        if (r > best_r) {
            best = i;
            best_r = r;
        }
    }
    return candidates[best];
}

double bon_kl_approx(int n) {
    if (n < 1) throw std::invalid_argument("bon_kl_approx: N must be >= 1");
    const double nd = static_cast<double>(n);
    return std::log(nd) - (nd - 1.0) / nd;
}

double bon_kl_exact(std::size_t pool_size, int n) {
    if (pool_size < 1) throw std::invalid_argument("bon_kl_exact: pool size must be >= 1");
    if (n < 1) throw std::invalid_argument("bon_kl_exact: N must be >= 1");
    if (n == 1) return 0.0;  // BoN(1) is the base policy
    const double logk = std::log(static_cast<double>(pool_size));
    const double nd = static_cast<double>(n);
    double kl = 0.0;
    for (std::size_t i = 1; i <= pool_size; ++i) {
        // P_i = (i/K)^N - ((i-1)/K)^N, evaluated in log space to survive
        // large N where i^N overflows.
        const double log_hi = nd * (std::log(static_cast<double>(i)) - logk);
        const double ratio = static_cast<double>(i - 1) / static_cast<double>(i);
        const double log_p = log_hi + std::log1p(-std::pow(ratio, nd));
        if (log_p < -700.0) continue;  // underflow: x log x -> 0
        const double p = std::exp(log_p);
        kl += p * (logk + log_p);
    }
    return kl;
}

void RlConfig::validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("RlConfig: alpha must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("RlConfig: learning_rate must be > 0");
    if (steps < 1) throw std::invalid_argument("RlConfig: steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("RlConfig: batch_size must be >= 1");
    if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) {
        throw std::invalid_argument("RlConfig: baseline_decay must be in [0,1)");
    }
    if (eval_interval < 1) throw std::invalid_argument("RlConfig: eval_interval must be >= 1");
}

std::pair<PolicyState, Trajectory> reinforce_run(const PolicyState& init, const ProxyFn& proxy,
                                                 const RlConfig& cfg, const WorldSpec& world,
                                                 const FeatureBank& bank, RngState& rng) {
    cfg.validate();
    world.validate();
    const std::size_t f = init.policy.mu.size();
    if (f != static_cast<std::size_t>(world.feature_count)) {
        throw std::invalid_argument("reinforce_run: policy dimension must equal F");
    }

    PolicyState state = init;
    Trajectory traj;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    double baseline = 0.0;
    bool baseline_ready = false;

    Vec g_buf(f), grad_mu(f), grad_ls(f);
    std::vector<Vec> logits(batch);
    Vec proxies(batch), regularized(batch), oracles(batch);

    for (int step = 0; step <= cfg.steps; ++step) {
        RngState step_rng = rng.substream(static_cast<std::uint64_t>(step));
        for (std::size_t k = 0; k < batch; ++k) {
            RngState ir = step_rng.substream(k);
            logits[k] = draw_logits(state.policy, ir);
            const Item item = item_from_logits(world, bank, logits[k], ir);
            proxies[k] = proxy(item);
            oracles[k] = oracle_reward(world, bank, item);
            const double log_ratio =
                state.policy.log_density(logits[k]) - state.reference.log_density(logits[k]);
            regularized[k] = proxies[k] - cfg.alpha * log_ratio;
        }

        double mean_proxy = 0.0, mean_oracle = 0.0, mean_reg = 0.0;
        for (std::size_t k = 0; k < batch; ++k) {
            mean_proxy += proxies[k];
            mean_oracle += oracles[k];
            mean_reg += regularized[k];
        }
        const double inv_b = 1.0 / static_cast<double>(batch);
        mean_proxy *= inv_b;
        mean_oracle *= inv_b;
        mean_reg *= inv_b;
        if (!std::isfinite(mean_reg)) {
            throw numerical_error("reinforce_run: non-finite reward at step " +
                                  std::to_string(step));
        }

        if (step % cfg.eval_interval == 0 || step == cfg.steps) {
            traj.push_back({step, mean_proxy, mean_oracle,
                            gaussian_kl(state.policy, state.reference)});
        }
        if (step == cfg.steps) break;

        if (!baseline_ready) {
            baseline = mean_reg;
            baseline_ready = true;
        }

        std::fill(grad_mu.begin(), grad_mu.end(), 0.0);
        std::fill(grad_ls.begin(), grad_ls.end(), 0.0);
        for (std::size_t k = 0; k < batch; ++k) {
            const double adv = regularized[k] - baseline;
            for (std::size_t j = 0; j < f; ++j) {
                const double s = std::exp(state.policy.log_sigma[j]);
                const double z = (logits[k][j] - state.policy.mu[j]) / s;
                grad_mu[j] += adv * z / s;
                grad_ls[j] += adv * (z * z - 1.0);
            }
        }
        bool finite = true;
        for (std::size_t j = 0; j < f; ++j) {
            state.policy.mu[j] += cfg.learning_rate * inv_b * grad_mu[j];
            state.policy.log_sigma[j] += cfg.learning_rate * inv_b * grad_ls[j];
            finite = finite && std::isfinite(state.policy.mu[j]) &&
                     std::isfinite(state.policy.log_sigma[j]);
        }
        if (!finite) {
            throw numerical_error("reinforce_run: non-finite update at step " +
                                  std::to_string(step));
        }
        baseline = cfg.baseline_decay * baseline + (1.0 - cfg.baseline_decay) * mean_reg;
    }
    return {std::move(state), std::move(traj)};
}

HackingReport hacking_report(const Trajectory& traj, double delta) {
    if (traj.empty()) throw std::invalid_argument("hacking_report: trajectory must be nonempty");
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("hacking_report: delta must be in (0,1)");
    }
    HackingReport report;
    std::size_t peak_idx = 0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (traj[i].oracle_reward > traj[peak_idx].oracle_reward) peak_idx = i;
    }
    report.peak_oracle = traj[peak_idx].oracle_reward;
    report.peak_step = traj[peak_idx].step;
    report.final_proxy = traj.back().proxy_reward;
    report.final_oracle = traj.back().oracle_reward;
    const double threshold = (1.0 - delta) * report.peak_oracle;
    for (const auto& row : traj) {
        if (row.oracle_reward < threshold && row.proxy_reward >= traj[peak_idx].proxy_reward) {
            report.collapse_step = row.step;
            break;
        }
    }
    return report;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    CsvTable table;
    table.header = {"step", "proxy", "oracle", "kl"};
    for (const auto& row : traj) {
        table.rows.push_back({std::to_string(row.step), format_g17(row.proxy_reward),
                              format_g17(row.oracle_reward), format_g17(row.kl_to_reference)});
    }
    table.write(path);
}

void write_bon_sweep_csv(const std::filesystem::path& path, std::span<const BonSweepRow> rows) {
    CsvTable table;
    table.header = {"N", "kl_approx", "mean_oracle", "mean_proxy"};
    for (const auto& row : rows) {
        table.rows.push_back({std::to_string(row.n), format_g17(row.kl_approx),
                              format_g17(row.mean_oracle), format_g17(row.mean_proxy)});
    }
    table.write(path);
}

}  // namespace warm
