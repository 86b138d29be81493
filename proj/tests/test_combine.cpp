#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "warm/combine.hpp"
#include "warm/presets.hpp"

using namespace warm;

namespace {

const NetShape kShape{6, 4};

Weights random_weights(std::uint64_t seed) {
    RngState rng = RngState::from_seed(seed);
    return Weights::random_init(kShape, rng);
}

Item item_of(std::initializer_list<double> xs) {
    Item item;
    item.x = xs;
    return item;
}

}  // namespace

TEST_CASE("lambda endpoints are bit-exact") {
    const Weights w1 = random_weights(1);
    const Weights w2 = random_weights(2);
    const Weights members[2] = {w1, w2};
    const double at0[2] = {1.0, 0.0};
    const double at1[2] = {0.0, 1.0};
    CHECK(weight_average(members, at0).values == w1.values);
    CHECK(weight_average(members, at1).values == w2.values);
}

TEST_CASE("averaging copies of one model returns it exactly") {
    const Weights w = random_weights(3);
    const std::vector<Weights> members(5, w);
    CHECK(weight_average(members).values == w.values);
}

TEST_CASE("member permutation with matching coefficients is inert") {
    const Weights a = random_weights(4);
    const Weights b = random_weights(5);
    const Weights c = random_weights(6);
    const Weights fwd[3] = {a, b, c};
    const Weights rev[3] = {c, a, b};
    const double cf[3] = {0.5, 0.25, 0.25};
    const double cr[3] = {0.25, 0.5, 0.25};
    CHECK(weight_average(fwd, cf).values == weight_average(rev, cr).values);
}

TEST_CASE("combiner validation") {
    const Weights a = random_weights(7);
    Weights odd = Weights::zeros(NetShape{6, 5});
    const Weights mixed[2] = {a, odd};
    CHECK_THROWS_AS(weight_average(mixed), std::invalid_argument);

    const Weights two[2] = {a, random_weights(8)};
    const double negative[2] = {1.5, -0.5};
    CHECK_THROWS_AS(weight_average(two, negative), std::invalid_argument);
    const double off_simplex[2] = {0.6, 0.6};
    CHECK_THROWS_AS(weight_average(two, off_simplex), std::invalid_argument);
}

TEST_CASE("ensemble of identical members equals a single forward") {
    const Weights w = random_weights(9);
    const std::vector<Weights> members(3, w);
    const Item item = item_of({0.3, -0.7, 1.1, 0.2, -0.4, 0.9});
    CHECK(ensemble_reward(members, {}, item) == forward(w, item));
}

TEST_CASE("ensemble endpoint equals the surviving member") {
    const Weights w1 = random_weights(10);
    const Weights w2 = random_weights(11);
    const Weights members[2] = {w1, w2};
    const double at1[2] = {0.0, 1.0};
    const Item item = item_of({0.3, -0.7, 1.1, 0.2, -0.4, 0.9});
    CHECK(ensemble_reward(members, at1, item) == forward(w2, item));
}

TEST_CASE("wa and ens agree to first order: log-log slope of the gap is ~2") {
    // phi2 = phi1 + eps * delta; |r_WA - r_ENS| should shrink as eps^2.
    const Weights base = random_weights(12);
    RngState drng = RngState::from_seed(13);
    Vec direction(base.values.size());
    for (auto& v : direction) v = drng.gaussian();
    const Item item = item_of({0.5, -0.2, 0.8, 1.3, -0.6, 0.4});

    Vec log_eps, log_gap;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        Weights shifted = base;
        for (std::size_t i = 0; i < shifted.values.size(); ++i) {
            shifted.values[i] += eps * direction[i];
        }
        const Weights members[2] = {base, shifted};
        const double half[2] = {0.5, 0.5};
        const double r_wa = forward(weight_average(members, half), item);
        const double r_ens = ensemble_reward(members, half, item);
        const double gap = std::abs(r_wa - r_ens);
        REQUIRE(gap > 0.0);
        log_eps.push_back(std::log(eps));
        log_gap.push_back(std::log(gap));
    }
    const std::size_t n = log_eps.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += log_eps[i];
        my += log_gap[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (log_eps[i] - mx) * (log_gap[i] - my);
        sxx += (log_eps[i] - mx) * (log_eps[i] - mx);
    }
    CHECK(sxy / sxx >= 1.8);
}

TEST_CASE("pairwise accuracy convention") {
    WorldSpec spec = WorldSpec::desk_default();
    RngState brng = RngState::from_seed(14);
    const FeatureBank bank = make_feature_bank(spec, brng);
    RngState grng = RngState::from_seed(15);
    const auto data = gen_preference_data(spec, bank, 300, SubsetTag::IdVal, grng);

    const RewardFn oracle = [&](const Item& it) { return oracle_reward(spec, bank, it); };
    CHECK(pairwise_accuracy(oracle, data) == 1.0);

    const RewardFn anti = [&](const Item& it) { return -oracle_reward(spec, bank, it); };
    CHECK(pairwise_accuracy(anti, data) == 0.0);

    const RewardFn constant = [](const Item&) { return 1.0; };
    CHECK(pairwise_accuracy(constant, data) == 1.0);  // ties count as correct

    CHECK_THROWS_AS(pairwise_accuracy(constant, std::span<const PreferencePair>{}),
                    std::invalid_argument);
}

TEST_CASE("lmc curve endpoints collapse to the member accuracies") {
    ExperimentConfig cfg;
    cfg.finetune.n_train = 128;
    cfg.finetune.n_id_val = 64;
    cfg.finetune.n_ood = 200;
    cfg.pretrain.n_pairs = 64;
    const LabData data = make_lab_data(cfg, 16);
    const NetShape shape{cfg.world.feature_count * cfg.world.feature_dim, 8};
    RngState r1 = RngState::from_seed(17);
    RngState r2 = RngState::from_seed(18);
    const Weights w1 = Weights::random_init(shape, r1);
    const Weights w2 = Weights::random_init(shape, r2);

    const double grid[3] = {0.0, 0.5, 1.0};
    const auto rows = lmc_curve(w1, w2, data.ood, grid);
    REQUIRE(rows.size() == 3);
    const double acc1 = pairwise_accuracy(w1, data.ood);
    const double acc2 = pairwise_accuracy(w2, data.ood);
    CHECK(rows.front().acc_wa == acc1);
    CHECK(rows.front().acc_ens == acc1);
    CHECK(rows.front().acc_diag == acc1);
    CHECK(rows.back().acc_wa == acc2);
    CHECK(rows.back().acc_ens == acc2);
    CHECK(rows.back().acc_diag == acc2);

    const double bad[1] = {1.5};
    CHECK_THROWS_AS(lmc_curve(w1, w2, data.ood, bad), std::invalid_argument);
}

TEST_CASE("identical members give exactly zero subset gaps") {
    ExperimentConfig cfg;
    cfg.finetune.n_train = 128;
    cfg.finetune.n_id_val = 32;
    cfg.finetune.n_ood = 32;
    cfg.pretrain.n_pairs = 32;
    cfg.corruption = 0.3;
    const LabData data = make_lab_data(cfg, 19);
    Weights sized = Weights::zeros(NetShape{cfg.world.feature_count * cfg.world.feature_dim, 4});
    RngState rng = RngState::from_seed(21);
    sized = Weights::random_init(sized.shape, rng);

    const std::vector<std::pair<Weights, Weights>> pairs = {{sized, sized}};
    const auto all = data.all_subsets();
    const SubsetGapReport report = subset_gap_report(pairs, all);
    REQUIRE(report.rows.size() == 4);
    for (const auto& row : report.rows) CHECK(row.gap == 0.0);
}

TEST_CASE("subset gap report names a missing subset") {
    ExperimentConfig cfg;
    cfg.finetune.n_train = 64;
    cfg.finetune.n_id_val = 16;
    cfg.finetune.n_ood = 16;
    cfg.pretrain.n_pairs = 32;
    const LabData data = make_lab_data(cfg, 22);  // no corruption: no train_corrupt subset
    Weights w = Weights::zeros(NetShape{cfg.world.feature_count * cfg.world.feature_dim, 4});
    const std::vector<std::pair<Weights, Weights>> pairs = {{w, w}};
    const auto all = data.all_subsets();
    try {
        subset_gap_report(pairs, all);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("train_corrupt") != std::string::npos);
    }
}

TEST_CASE("select_top_m selects and averages by validation accuracy") {
    const Weights a = random_weights(23);
    const Weights b = random_weights(24);
    const Weights c = random_weights(25);
    const std::vector<std::pair<Weights, double>> cands = {{a, 0.7}, {b, 0.9}, {c, 0.8}};

    CHECK(select_top_m(cands, 1).values == b.values);

    const Weights all3 = select_top_m(cands, 3);
    const Weights trio[3] = {a, b, c};
    CHECK(all3.values == weight_average(trio).values);

    CHECK_THROWS_AS(select_top_m(cands, 0), std::invalid_argument);
    CHECK_THROWS_AS(select_top_m(cands, 4), std::invalid_argument);
}

TEST_CASE("select_top_m breaks ties by input order") {
    const Weights a = random_weights(26);
    const Weights b = random_weights(27);
    const std::vector<std::pair<Weights, double>> cands = {{a, 0.8}, {b, 0.8}};
    CHECK(select_top_m(cands, 1).values == a.values);
}

TEST_CASE("moving average demands one trajectory and >= 2 checkpoints") {
    const Weights w = random_weights(28);
    Checkpoint c1{w, 100, 7};
    Checkpoint c2{w, 200, 7};
    Checkpoint other{w, 300, 8};

    const std::vector<Checkpoint> same = {c1, c2};
    CHECK(moving_average(same).values == w.values);  // identical checkpoints

    const std::vector<Checkpoint> single = {c1};
    CHECK_THROWS_AS(moving_average(single), std::invalid_argument);
    const std::vector<Checkpoint> mixed = {c1, other};
    CHECK_THROWS_AS(moving_average(mixed), std::invalid_argument);
}

TEST_CASE("same-config pair: interpolated accuracy tracks the prediction mixture") {
    // Reduced desk scale; the WA and ENS curves should agree within the
    // 0.03 band everywhere on the grid.
    ExperimentConfig cfg;
    cfg.finetune.n_train = 2048;
    cfg.finetune.n_id_val = 512;
    cfg.finetune.n_ood = 1000;
    cfg.finetune.steps = 1000;
    cfg.pretrain.n_pairs = 1024;
    cfg.pretrain.steps = 600;
    cfg.pretrain.snapshot_steps = {400, 500, 600};
    const std::uint64_t seed = 4;
    const LabData data = make_lab_data(cfg, seed);
    RmPool pool = make_pretrained_base(cfg, data, seed);
    auto [rm1, rm2] = train_same_config_pair(pool, cfg, data, seed, 0, 2);

    const auto grid = default_lambda_grid(11);
    const auto rows = lmc_curve(rm1.weights, rm2.weights, data.ood, grid);
    for (const auto& row : rows) {
        CHECK(std::abs(row.acc_wa - row.acc_ens) <= 0.03);
    }
}

TEST_CASE("moving average of one run loses to averaging independent runs") {
    // Remark-2 style comparison at reduced desk scale: the early+late
    // checkpoint average of a single fine-tuning against the two-run WARM
    // on the same data, both scored on OOD pairs.
    ExperimentConfig cfg;
    cfg.finetune.n_train = 2048;
    cfg.finetune.n_id_val = 512;
    cfg.finetune.n_ood = 1000;
    cfg.finetune.steps = 1200;
    cfg.pretrain.n_pairs = 1024;
    cfg.pretrain.steps = 600;
    cfg.pretrain.snapshot_steps = {400, 500, 600};
    const std::uint64_t seed = 3;
    const LabData data = make_lab_data(cfg, seed);
    RmPool pool = make_pretrained_base(cfg, data, seed);

    TrainConfig tcfg;
    tcfg.steps = cfg.finetune.steps;
    tcfg.batch_size = cfg.finetune.batch_size;
    tcfg.eval_interval = cfg.finetune.eval_interval;
    tcfg.data_order_seed = 1001;
    tcfg.snapshot_steps = {cfg.finetune.steps / 4, cfg.finetune.steps};
    const auto data_tv = data.train_and_val();
    const TrainResult run1 = train_rm(pool.init_for(2), tcfg, data_tv);

    TrainConfig tcfg2 = tcfg;
    tcfg2.data_order_seed = 1002;
    tcfg2.snapshot_steps = {cfg.finetune.steps};
    const TrainResult run2 = train_rm(pool.init_for(2), tcfg2, data_tv);

    REQUIRE(run1.snapshots.size() == 2);
    const Weights ma = moving_average(run1.snapshots);
    const Weights warm2_members[2] = {run1.weights, run2.weights};
    const Weights warm2 = weight_average(warm2_members);

    const double ma_acc = pairwise_accuracy(ma, data.ood);
    const double warm_acc = pairwise_accuracy(warm2, data.ood);
    CHECK(ma_acc <= warm_acc);

    // Late-only averaging stays close to the final checkpoint.
    TrainConfig tcfg3 = tcfg;
    tcfg3.snapshot_steps = {cfg.finetune.steps - 100, cfg.finetune.steps};
    const TrainResult run3 = train_rm(pool.init_for(2), tcfg3, data_tv);
    const Weights late_ma = moving_average(run3.snapshots);
    const double late_acc = pairwise_accuracy(late_ma, data.ood);
    const double final_acc = pairwise_accuracy(run3.weights, data.ood);
    CHECK(std::abs(late_acc - final_acc) <= 0.02);
}
