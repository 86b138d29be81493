#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "warm/parallel.hpp"
#include "warm/rng.hpp"
#include "warm/tensor.hpp"
#include "warm/world.hpp"

namespace warm {

// The idealized setting behind the ENS/WA limit analysis: F orthogonal
// features with per-feature pick probabilities p_j, a binary featurizer
// f_j ~ Bernoulli(p_j) and the optimal linear head omega = sum_j f_j z^j.
struct TheoryWorld {
    int feature_count = 0;  // F
    int feature_dim = 0;    // d, F <= d
    Vec p;                  // pick probabilities, size F
    Vec z_norms;            // |z^j|, size F
    double sigma = 0.0;     // item noise; the limits assume sigma << 1

    void validate() const;
};

struct TheoryRm {
    std::vector<std::uint8_t> mask;  // f_j in {0,1}
    Vec omega;                       // size d
};

TheoryRm sample_theory_rm(const TheoryWorld& world, const FeatureBank& bank, RngState& rng);

// Prediction of a selector/head pair on a bag-of-features input:
// omega . (sum_j f_j x^j). Real-valued selectors cover the averaged case.
double selector_reward(const Vec& omega, const Vec& selector, const Vec& x, int feature_dim);

// Closed forms for the infinite-member limits, y in {-1, +1}:
// ensemble keeps p_j, weight averaging squares it.
double ens_limit(const TheoryWorld& world, double y);
double wa_limit(const TheoryWorld& world, double y);

struct McLimitReport {
    std::size_t members = 0;
    std::size_t items = 0;
    double ens_mc = 0.0;
    double wa_mc = 0.0;
    double ens_cf = 0.0;
    double wa_cf = 0.0;
    double abs_err_ens = 0.0;
    double abs_err_wa = 0.0;
    double abs_err = 0.0;  // max of the two
};

// Samples M finite-member predictors, compares mean-prediction (ENS) and
// averaged-weights (WA) estimates against the closed forms on y=+1 items.
// Requires sigma <= 0.05; the limits only hold for small noise.
McLimitReport mc_limit_check(const TheoryWorld& world, std::size_t members, std::size_t n_items,
                             RngState& rng, Exec exec = Exec::Parallel);

// Stack of L independent selector layers; the WA limit picks up one factor
// of p_j per layer. Returns the MC estimate of the WA prediction.
double mc_wa_depth_estimate(const TheoryWorld& world, int layers, std::size_t members,
                            RngState& rng);

void write_mc_report_json(const std::filesystem::path& path, const McLimitReport& report);

}  // namespace warm
