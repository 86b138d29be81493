#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "warm/align.hpp"
#include "warm/errors.hpp"
#include "warm/io.hpp"
#include "warm/presets.hpp"

using namespace warm;

namespace {

struct PolicyFixture {
    ExperimentConfig cfg;
    LabData data;

    PolicyFixture() {
        cfg.finetune.n_train = 64;
        cfg.finetune.n_id_val = 16;
        cfg.finetune.n_ood = 16;
        cfg.pretrain.n_pairs = 32;
        data = make_lab_data(cfg, 40);
    }
};

}  // namespace

TEST_CASE("near-deterministic uniform policy allocates budget evenly") {
    PolicyFixture fx;
    const PolicyState pol = PolicyState::init(
        GaussianPolicy::uniform(fx.cfg.world.feature_count, 1e-8));
    RngState rng = RngState::from_seed(41);
    const auto items = policy_sample(pol, fx.cfg.world, fx.data.bank, 10, rng);
    const double share = fx.cfg.world.budget / fx.cfg.world.feature_count;
    for (const auto& item : items) {
        for (double a : item.intensity) {
            CHECK(std::abs(a - share) <= 1e-6);
        }
    }
}

TEST_CASE("allocations always sum to the budget") {
    PolicyFixture fx;
    PolicyState pol = PolicyState::init(GaussianPolicy::uniform(fx.cfg.world.feature_count, 0.8));
    pol.policy.mu = {2.0, -1.0, 0.5, 0.0, 1.5, -2.0, 0.3, 0.9};
    RngState rng = RngState::from_seed(42);
    const auto items = policy_sample(pol, fx.cfg.world, fx.data.bank, 500, rng);
    for (const auto& item : items) {
        double total = 0.0;
        for (double a : item.intensity) total += a;
        CHECK(std::abs(total - fx.cfg.world.budget) <= 1e-9);
    }
}

TEST_CASE("a causally tilted reference policy earns positive oracle reward") {
    PolicyFixture fx;
    PolicyState pol = PolicyState::init(GaussianPolicy::uniform(fx.cfg.world.feature_count, 0.5));
    pol.policy.mu[0] = 2.0;  // favor the causal features
    pol.policy.mu[1] = 2.0;
    RngState rng = RngState::from_seed(43);
    const auto items = policy_sample(pol, fx.cfg.world, fx.data.bank, 1000, rng);
    double mean = 0.0;
    for (const auto& item : items) mean += oracle_reward(fx.cfg.world, fx.data.bank, item);
    CHECK(mean / static_cast<double>(items.size()) > 0.0);
}

TEST_CASE("best_of_n basics") {
    Item a, b, c;
    a.x = {1.0};
    b.x = {2.0};
    c.x = {3.0};
    const std::vector<Item> candidates = {a, b, c};

    const ProxyFn first_coord = [](const Item& it) { return it.x[0]; };
    CHECK(&best_of_n(first_coord, std::span<const Item>(candidates.data(), 1)) ==
          &candidates[0]);
    CHECK(best_of_n(first_coord, candidates).x[0] == 3.0);

    const ProxyFn constant = [](const Item&) { return 1.0; };
    CHECK(&best_of_n(constant, candidates) == &candidates[0]);  // ties: lowest index

    CHECK_THROWS_AS(best_of_n(constant, std::span<const Item>{}), std::invalid_argument);
}

TEST_CASE("oracle-guided BoN improves with N") {
    PolicyFixture fx;
    const PolicyState pol = PolicyState::init(
        GaussianPolicy::uniform(fx.cfg.world.feature_count, 0.5));
    const ProxyFn oracle = [&](const Item& it) {
        return oracle_reward(fx.cfg.world, fx.data.bank, it);
    };
    RngState rng = RngState::from_seed(44);
    const int levels[4] = {1, 4, 16, 64};
    double mean[4] = {0.0, 0.0, 0.0, 0.0};
    const int prompts = 200;
    for (int p = 0; p < prompts; ++p) {
        RngState prng = rng.substream(static_cast<std::uint64_t>(p));
        const auto cands = policy_sample(pol, fx.cfg.world, fx.data.bank, 64, prng);
        for (int l = 0; l < 4; ++l) {
            const Item& best =
                best_of_n(oracle, std::span<const Item>(cands.data(),
                                                        static_cast<std::size_t>(levels[l])));
            mean[l] += oracle_reward(fx.cfg.world, fx.data.bank, best);
        }
    }
    for (int l = 0; l < 4; ++l) mean[l] /= prompts;
    CHECK(mean[1] >= mean[0] - 0.02);
    CHECK(mean[2] >= mean[1] - 0.02);
    CHECK(mean[3] >= mean[2] - 0.02);
}

TEST_CASE("bon kl approximation formula") {
    CHECK(bon_kl_approx(1) == 0.0);
    CHECK(bon_kl_approx(8) == doctest::Approx(1.2044415417).epsilon(1e-9));
    CHECK(bon_kl_approx(64) == doctest::Approx(3.1745080834).epsilon(1e-9));
    CHECK_THROWS_AS(bon_kl_approx(0), std::invalid_argument);
}

TEST_CASE("bon kl exact against hand enumeration at K=2, N=2") {
    // Two draws from {r1 < r2}: outcomes (1,1) (1,2) (2,1) (2,2). The max is
    // rank 1 only for (1,1), so P = (1/4, 3/4); KL vs uniform follows.
    const double p1 = 1.0 / 4.0;
    const double p2 = 3.0 / 4.0;
    const double expected = p1 * std::log(2.0 * p1) + p2 * std::log(2.0 * p2);
    CHECK(bon_kl_exact(2, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bon_kl_exact(2, 2) == doctest::Approx(0.13081).epsilon(1e-4));
}

TEST_CASE("bon kl exact reduces to zero at N=1 and approaches the formula") {
    CHECK(bon_kl_exact(1, 1) == 0.0);
    CHECK(bon_kl_exact(1000, 1) == 0.0);
    CHECK(std::abs(bon_kl_exact(10000, 8) - bon_kl_approx(8)) <= 0.02);
}

TEST_CASE("gaussian kl closed form") {
    GaussianPolicy ref = GaussianPolicy::uniform(4, 1.0);
    CHECK(gaussian_kl(ref, ref) == 0.0);

    GaussianPolicy shifted = ref;
    shifted.mu[2] = 0.7;
    CHECK(gaussian_kl(shifted, ref) == doctest::Approx(0.7 * 0.7 / 2.0).epsilon(1e-12));

    // Joint coordinate permutation leaves the divergence unchanged.
    GaussianPolicy pol = ref;
    pol.mu = {0.3, -0.2, 0.9, 0.1};
    pol.log_sigma = {0.1, -0.3, 0.2, 0.0};
    GaussianPolicy pol_perm = pol;
    GaussianPolicy ref_perm = ref;
    std::swap(pol_perm.mu[0], pol_perm.mu[3]);
    std::swap(pol_perm.log_sigma[0], pol_perm.log_sigma[3]);
    std::swap(ref_perm.mu[0], ref_perm.mu[3]);
    std::swap(ref_perm.log_sigma[0], ref_perm.log_sigma[3]);
    CHECK(gaussian_kl(pol, ref) == doctest::Approx(gaussian_kl(pol_perm, ref_perm)).epsilon(1e-12));
    CHECK(gaussian_kl(pol, ref) >= 0.0);
}

TEST_CASE("overwhelming KL regularization pins the policy to its reference") {
    PolicyFixture fx;
    const PolicyState init = PolicyState::init(
        GaussianPolicy::uniform(fx.cfg.world.feature_count, 0.5));
    RlConfig cfg;
    cfg.alpha = 1000.0;
    // The penalty rescales rewards by ~alpha, so the step size shrinks
    // accordingly or the score-function updates overshoot.
    cfg.learning_rate = 3e-4;
    cfg.steps = 400;
    cfg.batch_size = 32;
    cfg.eval_interval = 50;
    const ProxyFn oracle = [&](const Item& it) {
        return oracle_reward(fx.cfg.world, fx.data.bank, it);
    };
    RngState rng = RngState::from_seed(45);
    const auto [state, traj] = reinforce_run(init, oracle, cfg, fx.cfg.world, fx.data.bank, rng);
    CHECK(traj.back().kl_to_reference <= 0.05);
}

TEST_CASE("optimizing the oracle improves the oracle") {
    PolicyFixture fx;
    const PolicyState init = PolicyState::init(
        GaussianPolicy::uniform(fx.cfg.world.feature_count, 0.5));
    RlConfig cfg;
    cfg.alpha = 0.003;
    cfg.steps = 400;
    cfg.batch_size = 32;
    cfg.eval_interval = 20;
    const ProxyFn oracle = [&](const Item& it) {
        return oracle_reward(fx.cfg.world, fx.data.bank, it);
    };
    RngState rng = RngState::from_seed(46);
    const auto [state, traj] = reinforce_run(init, oracle, cfg, fx.cfg.world, fx.data.bank, rng);

    const double initial = traj.front().oracle_reward;
    double tail = 0.0;
    int count = 0;
    const std::size_t tail_start = traj.size() - std::max<std::size_t>(1, traj.size() / 10);
    for (std::size_t i = tail_start; i < traj.size(); ++i) {
        tail += traj[i].oracle_reward;
        ++count;
    }
    CHECK(tail / count > initial);
}

TEST_CASE("alpha 0 oracle optimization is nondecreasing over coarse windows") {
    PolicyFixture fx;
    const PolicyState init = PolicyState::init(
        GaussianPolicy::uniform(fx.cfg.world.feature_count, 0.5));
    RlConfig cfg;
    cfg.alpha = 0.0;
    cfg.steps = 600;
    cfg.batch_size = 32;
    cfg.eval_interval = 20;
    const ProxyFn oracle = [&](const Item& it) {
        return oracle_reward(fx.cfg.world, fx.data.bank, it);
    };
    RngState rng = RngState::from_seed(47);
    const auto [state, traj] = reinforce_run(init, oracle, cfg, fx.cfg.world, fx.data.bank, rng);

    // Windows of 5 evals = 100 steps.
    std::vector<double> windows;
    for (std::size_t i = 0; i + 5 <= traj.size(); i += 5) {
        double m = 0.0;
        for (std::size_t k = i; k < i + 5; ++k) m += traj[k].oracle_reward;
        windows.push_back(m / 5.0);
    }
    for (std::size_t i = 1; i < windows.size(); ++i) {
        CHECK(windows[i] >= windows[i - 1] - 0.05);
    }
}

TEST_CASE("hacking report on a hand trajectory") {
    Trajectory monotone = {{0, 0.1, 1.0, 0.0}, {10, 0.2, 2.0, 0.1}, {20, 0.3, 3.0, 0.2}};
    const HackingReport up = hacking_report(monotone, 0.2);
    CHECK(!up.collapse_step.has_value());
    CHECK(up.peak_oracle == 3.0);
    CHECK(up.peak_step == 20);

    Trajectory dip = {{0, 0.1, 1.0, 0.0}, {10, 0.2, 2.0, 0.1}, {20, 0.3, 3.0, 0.2},
                      {30, 0.4, 2.0, 0.3}};
    const HackingReport report = hacking_report(dip, 0.2);
    REQUIRE(report.collapse_step.has_value());
    CHECK(*report.collapse_step == 30);  // 2.0 < 0.8 * 3.0 with proxy still rising
    CHECK(report.final_oracle == 2.0);
    CHECK(report.final_proxy == 0.4);

    CHECK_THROWS_AS(hacking_report({}, 0.2), std::invalid_argument);
}

TEST_CASE("trajectory csv shape") {
    Trajectory traj = {{0, 0.5, 1.0, 0.0}, {10, 0.6, 1.1, 0.2}};
    const auto path = std::filesystem::temp_directory_path() / "warm_test_traj.csv";
    write_trajectory_csv(path, traj);
    const std::string text = read_text_file(path);
    CHECK(text.rfind("step,proxy,oracle,kl\n", 0) == 0);
    CHECK(text.find("\n10,") != std::string::npos);
    std::filesystem::remove(path);
}
