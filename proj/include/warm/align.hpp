#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "warm/rng.hpp"
#include "warm/tensor.hpp"
#include "warm/world.hpp"

namespace warm {

// Diagonal Gaussian over feature logits; generation maps a logit draw g to
// the intensity allocation budget * softmax(g).
struct GaussianPolicy {
    Vec mu;
    Vec log_sigma;

    static GaussianPolicy uniform(int features, double sigma0);
    double log_density(const Vec& g) const;
};

struct PolicyState {
    GaussianPolicy policy;
    GaussianPolicy reference;  // frozen SFT analog

    static PolicyState init(const GaussianPolicy& start) { return {start, start}; }
};

// Closed-form KL between the diagonal Gaussians of two policies.
double gaussian_kl(const GaussianPolicy& pol, const GaussianPolicy& ref);

// Draws n items from the policy: g ~ N(mu, diag(sigma^2)), intensities
// budget * softmax(g), y = +1, noise sigma_train.
std::vector<Item> policy_sample(const PolicyState& pol, const WorldSpec& world,
                                const FeatureBank& bank, std::size_t n, RngState& rng);

using ProxyFn = std::function<double(const Item&)>;

// Argmax of the proxy; ties go to the lowest index.
const Item& best_of_n(const ProxyFn& proxy, std::span<const Item> candidates);

// log N - (N-1)/N, the standard estimate of KL(BoN || base).
double bon_kl_approx(int n);

// Brute-force oracle for the approximation: BoN over a uniform pool of K
// distinct-reward candidates selects rank i with probability
// (i^N - (i-1)^N) / K^N; returns the KL of that law against uniform.
double bon_kl_exact(std::size_t pool_size, int n);

struct RlConfig {
    double alpha = 0.003;       // KL regularization strength
    double learning_rate = 0.05;
    int steps = 800;
    int batch_size = 64;
    double baseline_decay = 0.9;
    int eval_interval = 20;

    void validate() const;
};

struct TrajectoryRow {
    int step = 0;
    double proxy_reward = 0.0;
    double oracle_reward = 0.0;
    double kl_to_reference = 0.0;
};

using Trajectory = std::vector<TrajectoryRow>;

// REINFORCE with an EMA scalar baseline on the regularized reward
// proxy(item) - alpha * (log pi(g) - log pi_ref(g)). The trajectory logs
// batch proxy/oracle means and the closed-form KL; the oracle is recorded
// for diagnostics only and never enters the update.
std::pair<PolicyState, Trajectory> reinforce_run(const PolicyState& init, const ProxyFn& proxy,
                                                 const RlConfig& cfg, const WorldSpec& world,
                                                 const FeatureBank& bank, RngState& rng);

struct HackingReport {
    double peak_oracle = 0.0;
    int peak_step = 0;
    std::optional<int> collapse_step;  // none when the oracle never gave back delta of its peak
    double final_proxy = 0.0;
    double final_oracle = 0.0;
};

// collapse_step: first eval whose oracle fell below (1-delta) * peak while
// the proxy was at or above its value at the peak.
HackingReport hacking_report(const Trajectory& traj, double delta = 0.1);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

struct BonSweepRow {
    int n = 0;
    double kl_approx = 0.0;
    double mean_oracle = 0.0;
    double mean_proxy = 0.0;
};

void write_bon_sweep_csv(const std::filesystem::path& path, std::span<const BonSweepRow> rows);

}  // namespace warm
