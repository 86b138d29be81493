#include "warm/presets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "warm/align.hpp"
#include "warm/io.hpp"
#include "warm/theory.hpp"

namespace warm {
namespace {

constexpr std::uint64_t kBankStream = 0x6261;
constexpr std::uint64_t kDataStream = 0x6461;
constexpr std::uint64_t kPretrainStream = 0x7072;
constexpr std::uint64_t kRunSeedStream = 0x7275;
constexpr std::uint64_t kPairSeedStream = 0x7061;
constexpr std::uint64_t kRlStream = 0x726c;

// Parallel loop over independent work items (training runs, RL seeds).
// Results land in index-addressed slots, so the job count cannot change
// any output. Exceptions are carried out of the parallel region.
void parallel_jobs(int n, int jobs, const std::function<void(int)>& fn) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs))
#endif
    for (int i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    (void)jobs;
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string hash_hex(const std::string& content) {
    std::ostringstream ss;
    ss << std::hex << fnv1a64({content.data(), content.size()});
    return ss.str();
}

}  // namespace

std::vector<PreferencePair> LabData::train_and_val() const {
    std::vector<PreferencePair> out = train;
    out.insert(out.end(), id_val.begin(), id_val.end());
    return out;
}

std::vector<PreferencePair> LabData::all_subsets() const {
    std::vector<PreferencePair> out = train;
    out.insert(out.end(), id_val.begin(), id_val.end());
    out.insert(out.end(), ood.begin(), ood.end());
    return out;
}

LabData make_lab_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.world.validate();
    LabData data;
    data.world = cfg.world;

    RngState root = RngState::from_seed(seed, kBankStream);
    RngState bank_rng = root.substream(0);
    data.bank = make_feature_bank(data.world, bank_rng);

    RngState gen_root = RngState::from_seed(seed, kDataStream);
    RngState pre_rng = gen_root.substream(0);
    RngState train_rng = gen_root.substream(1);
    RngState val_rng = gen_root.substream(2);
    RngState ood_rng = gen_root.substream(3);
    RngState corrupt_rng = gen_root.substream(4);

    WorldSpec easy = data.world;
    easy.sigma_train *= cfg.pretrain.sigma_scale;
    data.pretrain = gen_preference_data(easy, data.bank,
                                        static_cast<std::size_t>(cfg.pretrain.n_pairs),
                                        SubsetTag::TrainClean, pre_rng);
    data.train = gen_preference_data(data.world, data.bank,
                                     static_cast<std::size_t>(cfg.finetune.n_train),
                                     SubsetTag::TrainClean, train_rng);
    data.id_val = gen_preference_data(data.world, data.bank,
                                      static_cast<std::size_t>(cfg.finetune.n_id_val),
                                      SubsetTag::IdVal, val_rng);
    data.ood = gen_preference_data(data.world, data.bank,
                                   static_cast<std::size_t>(cfg.finetune.n_ood),
                                   SubsetTag::OodTest, ood_rng);
    if (cfg.corruption > 0.0) {
        data.train = corrupt_labels(std::move(data.train), cfg.corruption, corrupt_rng);
    }
    return data;
}

ExperimentConfig hacking_recipe(ExperimentConfig cfg) {
    if (cfg.corruption == 0.0) cfg.corruption = 0.25;
    cfg.finetune.steps = cfg.finetune.corrupt_steps;
    for (int j = 0; j < cfg.world.feature_count; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (cfg.world.causal_mask[u]) cfg.world.norms[u] = cfg.rl.causal_norm;
    }
    cfg.world.norms[static_cast<std::size_t>(cfg.world.spurious_feature())] = cfg.rl.spur_norm;
    return cfg;
}

std::vector<std::size_t> RmPool::ranked_by_val() const {
    std::vector<std::size_t> order(runs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return runs[a].id_val_acc > runs[b].id_val_acc;
    });
    return order;
}

Weights RmPool::init_for(int checkpoint_id) const {
    const auto idx = static_cast<std::size_t>(checkpoint_id);
    if (idx >= pretrain_ckpts.size()) {
        throw std::invalid_argument("RmPool: init checkpoint id out of range");
    }
    Weights init = pretrain_ckpts[idx].weights;
    // Baklava: different featurizer checkpoints, one shared probed head.
    std::copy(probed.values.begin() + static_cast<std::ptrdiff_t>(probed.featurizer_size()),
              probed.values.end(),
              init.values.begin() + static_cast<std::ptrdiff_t>(init.featurizer_size()));
    return init;
}

RmPool make_pretrained_base(const ExperimentConfig& cfg, const LabData& data,
                            std::uint64_t seed) {
    NetShape shape{cfg.world.feature_count * cfg.world.feature_dim, cfg.finetune.hidden};
    RngState rng = RngState::from_seed(seed, kPretrainStream);
    RmPool pool;
    pool.pretrain_ckpts = pretrain_trajectory(
        shape, data.pretrain, cfg.pretrain.steps, cfg.pretrain.snapshot_steps, rng,
        PretrainOptions{cfg.pretrain.learning_rate, cfg.pretrain.batch_size});
    pool.probed = linear_probe(pool.pretrain_ckpts.back(), data.train, cfg.finetune.probe_steps,
                               cfg.finetune.probe_lr);
    return pool;
}

Weights pool_init_for_config(const RmPool& pool, const TrainConfig& cfg) {
    Weights init = pool.init_for(cfg.init_checkpoint_id);
    if (cfg.probe_mode == TrainConfig::ProbeMode::RandomHead) {
        RngState head_rng = RngState::from_seed(cfg.data_order_seed, 0x68656164);
        const double scale = 1.0 / std::sqrt(static_cast<double>(init.shape.hidden));
        for (auto& v : init.head()) v = scale * head_rng.gaussian();
        init.bias() = 0.0;
    }
    return init;
}

namespace {

TrainedRm run_one(const RmPool& pool, const TrainConfig& tcfg,
                  std::span<const PreferencePair> train_val, const LabData& data) {
    TrainResult res = train_rm(pool_init_for_config(pool, tcfg), tcfg, train_val);
    TrainedRm rm;
    rm.cfg = tcfg;
    rm.log = std::move(res.log);
    rm.id_val_acc = pairwise_accuracy(res.weights, data.id_val);
    rm.ood_acc = pairwise_accuracy(res.weights, data.ood);
    rm.weights = std::move(res.weights);
    return rm;
}

}  // namespace

void train_pool_runs(RmPool& pool, const ExperimentConfig& cfg, const LabData& data,
                     std::uint64_t seed, int n_runs, int jobs) {
    const auto& ft = cfg.finetune;
    const std::size_t n_lr = ft.learning_rates.size();
    const std::size_t n_do = ft.dropouts.size();
    const std::size_t n_ck = pool.pretrain_ckpts.size();
    RngState seed_rng = RngState::from_seed(seed, kRunSeedStream);

    std::vector<TrainConfig> grid;
    for (int i = 0; i < n_runs; ++i) {
        const auto u = static_cast<std::size_t>(i);
        TrainConfig tcfg;
        tcfg.learning_rate = ft.learning_rates[u % n_lr];
        tcfg.dropout_p = ft.dropouts[(u / n_lr) % n_do];
        tcfg.init_checkpoint_id = static_cast<int>(u % n_ck);
        tcfg.steps = ft.steps;
        tcfg.batch_size = ft.batch_size;
        tcfg.eval_interval = ft.eval_interval;
        tcfg.data_order_seed = seed_rng.substream(u).next_u64();
        grid.push_back(tcfg);
    }

    const std::vector<PreferencePair> train_val = data.train_and_val();
    std::vector<TrainedRm> results(grid.size());
    parallel_jobs(n_runs, jobs, [&](int i) {
        results[static_cast<std::size_t>(i)] =
            run_one(pool, grid[static_cast<std::size_t>(i)], train_val, data);
    });
    for (auto& rm : results) pool.runs.push_back(std::move(rm));
}

std::pair<TrainedRm, TrainedRm> train_same_config_pair(const RmPool& pool,
                                                       const ExperimentConfig& cfg,
                                                       const LabData& data, std::uint64_t seed,
                                                       int pair_index, int jobs) {
    const auto& ft = cfg.finetune;
    RngState seed_rng = RngState::from_seed(seed, kPairSeedStream);
    TrainConfig base;
    base.learning_rate = ft.learning_rates[ft.learning_rates.size() / 2];
    base.dropout_p = ft.dropouts.front();
    base.init_checkpoint_id = static_cast<int>(pool.pretrain_ckpts.size()) - 1;
    base.steps = ft.steps;
    base.batch_size = ft.batch_size;
    base.eval_interval = ft.eval_interval;

    std::vector<TrainConfig> cfgs(2, base);
    cfgs[0].data_order_seed =
        seed_rng.substream(2 * static_cast<std::uint64_t>(pair_index)).next_u64();
    cfgs[1].data_order_seed =
        seed_rng.substream(2 * static_cast<std::uint64_t>(pair_index) + 1).next_u64();

    const std::vector<PreferencePair> train_val = data.train_and_val();
    std::vector<TrainedRm> results(2);
    parallel_jobs(2, jobs, [&](int i) {
        results[static_cast<std::size_t>(i)] =
            run_one(pool, cfgs[static_cast<std::size_t>(i)], train_val, data);
    });
    return {std::move(results[0]), std::move(results[1])};
}

void OutputTracker::write(const std::string& rel_path, const std::string& content) {
    write_text_file(root / rel_path, content);
    files[rel_path] = {content.size(), hash_hex(content)};
}

void OutputTracker::track(const std::string& rel_path) {
    const std::string content = read_text_file(root / rel_path);
    files[rel_path] = {content.size(), hash_hex(content)};
}

void OutputTracker::write_manifest(const std::string& preset, const ExperimentConfig& cfg) {
    nlohmann::json manifest;
    manifest["preset"] = preset;
    manifest["seeds"] = cfg.seeds;
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    manifest["generated_at_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    nlohmann::json files_j = nlohmann::json::object();
    for (const auto& [rel, info] : files) {
        files_j[rel] = {{"bytes", info.first}, {"fnv1a64", info.second}};
    }
    manifest["files"] = files_j;
    write_text_file(root / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

void run_exp_theory(const ExperimentConfig& cfg, OutputTracker& out, int /*jobs*/) {
    const auto& tb = cfg.theory;
    TheoryWorld world{static_cast<int>(tb.p.size()), tb.feature_dim, tb.p, tb.norms, tb.sigma};
    RngState rng = RngState::from_seed(cfg.seeds.front(), 0x7e0);
    const McLimitReport report = mc_limit_check(world, tb.members, tb.n_items, rng);
    write_mc_report_json(out.root / "theory_report.json", report);
    out.track("theory_report.json");

    // Convergence-rate table: median absolute WA error over 20 repetitions
    // at M, 2M, 4M.
    CsvTable rate;
    rate.header = {"members", "median_abs_err_wa", "median_abs_err_ens"};
    for (std::uint64_t m : {tb.members / 4, tb.members / 2, tb.members}) {
        if (m == 0) continue;
        Vec errs_wa, errs_ens;
        for (int rep = 0; rep < 20; ++rep) {
            RngState rep_rng =
                RngState::from_seed(cfg.seeds.front(), 0x7e1).substream(
                    static_cast<std::uint64_t>(rep) * 131 + m);
            const McLimitReport r = mc_limit_check(world, m, tb.n_items, rep_rng);
            errs_wa.push_back(r.abs_err_wa);
            errs_ens.push_back(r.abs_err_ens);
        }
        std::sort(errs_wa.begin(), errs_wa.end());
        std::sort(errs_ens.begin(), errs_ens.end());
        rate.rows.push_back({std::to_string(m), format_g17(errs_wa[errs_wa.size() / 2]),
                             format_g17(errs_ens[errs_ens.size() / 2])});
    }
    out.write("theory_rate.csv", rate.to_string());

    // p^2 <= p must hold exactly for every probability vector.
    RngState prng = RngState::from_seed(cfg.seeds.front(), 0x7e2);
    for (int k = 0; k < 1000; ++k) {
        TheoryWorld w2 = world;
        for (auto& p : w2.p) p = prng.uniform();
        if (wa_limit(w2, 1.0) > ens_limit(w2, 1.0)) {
            throw std::runtime_error("exp-theory: wa_limit exceeded ens_limit (draw " +
                                     std::to_string(k) + ")");
        }
    }
    std::cout << "exp-theory: ens_mc=" << report.ens_mc << " (cf " << report.ens_cf
              << "), wa_mc=" << report.wa_mc << " (cf " << report.wa_cf << ")\n";
}

void run_exp_lmc(const ExperimentConfig& cfg_in, OutputTracker& out, int jobs) {
    ExperimentConfig cfg = cfg_in;
    cfg.corruption = 0.0;  // the interpolation experiment runs on clean labels
    const std::uint64_t seed = cfg.seeds.front();
    const LabData data = make_lab_data(cfg, seed);
    RmPool pool = make_pretrained_base(cfg, data, seed);
    const std::vector<double> grid = default_lambda_grid(cfg.combine.lambda_points);

    CsvTable summary;
    summary.header = {"pair_id", "acc_phi1", "acc_phi2", "min_gap_wa_vs_diag"};
    for (int k = 0; k < cfg.combine.n_lmc_pairs; ++k) {
        auto [rm1, rm2] = train_same_config_pair(pool, cfg, data, seed, k, jobs);
        const std::vector<LmcRow> rows = lmc_curve(rm1.weights, rm2.weights, data.ood, grid);
        std::filesystem::path rel = "lmc_pair" + std::to_string(k) + ".csv";
        CsvTable table;
        table.header = {"lambda", "acc_wa", "acc_ens", "acc_diag"};
        for (const auto& row : rows) {
            table.rows.push_back({format_g17(row.lambda), format_g17(row.acc_wa),
                                  format_g17(row.acc_ens), format_g17(row.acc_diag)});
        }
        out.write(rel.string(), table.to_string());
        double min_gap = 1.0;
        for (const auto& row : rows) min_gap = std::min(min_gap, row.acc_wa - row.acc_diag);
        summary.rows.push_back({std::to_string(k), format_g17(rows.front().acc_wa),
                                format_g17(rows.back().acc_wa), format_g17(min_gap)});
        std::cout << "exp-lmc: pair " << k << " min(acc_wa - acc_diag) = " << min_gap << "\n";
    }
    out.write("lmc_summary.csv", summary.to_string());
}

void run_exp_corrupt(const ExperimentConfig& cfg_in, OutputTracker& out, int jobs) {
    ExperimentConfig cfg = cfg_in;
    if (cfg.corruption == 0.0) cfg.corruption = 0.25;
    cfg.finetune.steps = cfg.finetune.corrupt_steps;  // memorization regime
    const std::uint64_t seed = cfg.seeds.front();
    const LabData data = make_lab_data(cfg, seed);
    RmPool pool = make_pretrained_base(cfg, data, seed);
    train_pool_runs(pool, cfg, data, seed, 2 * cfg.combine.n_rm_pairs, jobs);

    std::vector<std::pair<Weights, Weights>> pairs;
    for (int k = 0; k < cfg.combine.n_rm_pairs; ++k) {
        pairs.emplace_back(pool.runs[static_cast<std::size_t>(2 * k)].weights,
                           pool.runs[static_cast<std::size_t>(2 * k + 1)].weights);
    }
    const std::vector<PreferencePair> all = data.all_subsets();
    const SubsetGapReport report = subset_gap_report(pairs, all);

    write_gap_csv(out.root / "gaps.csv", report);
    out.track("gaps.csv");

    write_dataset_jsonl(out.root / "dataset_train.jsonl", data.train);
    out.track("dataset_train.jsonl");

    for (const auto& [tag, gap] : report.mean_gap) {
        std::cout << "exp-corrupt: mean gap " << to_string(tag) << " = " << gap << "\n";
    }
}

void run_exp_select(const ExperimentConfig& cfg, OutputTracker& out, int jobs) {
    CsvTable table;
    table.header = {"seed", "group", "ood_acc"};
    CsvTable pool_table;
    pool_table.header = {"seed", "run", "learning_rate", "dropout", "init_ckpt", "id_val_acc",
                         "ood_acc"};
    const std::size_t n_seeds = std::min<std::size_t>(3, cfg.seeds.size());
    for (std::size_t si = 0; si < n_seeds; ++si) {
        const std::uint64_t seed = cfg.seeds[si];
        const LabData data = make_lab_data(cfg, seed);
        RmPool pool = make_pretrained_base(cfg, data, seed);
        train_pool_runs(pool, cfg, data, seed, cfg.finetune.n_runs, jobs);

        std::vector<std::pair<Weights, double>> candidates;
        for (const auto& run : pool.runs) candidates.emplace_back(run.weights, run.id_val_acc);
        const int m = std::min(6, cfg.finetune.n_runs);
        const Weights top = select_top_m(candidates, m);

        auto order = pool.ranked_by_val();
        std::vector<Weights> worst;
        for (std::size_t i = order.size() - static_cast<std::size_t>(m); i < order.size(); ++i) {
            worst.push_back(pool.runs[order[i]].weights);
        }
        const Weights bottom = weight_average(worst);

        const double top_acc = pairwise_accuracy(top, data.ood);
        const double bottom_acc = pairwise_accuracy(bottom, data.ood);
        table.rows.push_back({std::to_string(seed), "top" + std::to_string(m),
                              format_g17(top_acc)});
        table.rows.push_back({std::to_string(seed), "bottom" + std::to_string(m),
                              format_g17(bottom_acc)});
        for (std::size_t r = 0; r < pool.runs.size(); ++r) {
            const auto& run = pool.runs[r];
            pool_table.rows.push_back({std::to_string(seed), std::to_string(r),
                                       format_g17(run.cfg.learning_rate),
                                       format_g17(run.cfg.dropout_p),
                                       std::to_string(run.cfg.init_checkpoint_id),
                                       format_g17(run.id_val_acc), format_g17(run.ood_acc)});
            const std::string rel = "train_log_s" + std::to_string(seed) + "_run" +
                                    std::to_string(r) + ".csv";
            write_train_log_csv(out.root / rel, run.log);
            out.track(rel);
        }
        std::cout << "exp-select: seed " << seed << " top" << m << "=" << top_acc << " bottom"
                  << m << "=" << bottom_acc << "\n";
    }
    out.write("select.csv", table.to_string());
    out.write("select_pool.csv", pool_table.to_string());
}

void run_exp_bon(const ExperimentConfig& cfg, OutputTracker& out, int jobs) {
    CsvTable kl_table;
    kl_table.header = {"N", "kl_exact", "kl_approx", "abs_diff"};
    for (int n : cfg.bon.n_values) {
        const double exact = bon_kl_exact(cfg.bon.kl_pool, n);
        const double approx = bon_kl_approx(n);
        kl_table.rows.push_back({std::to_string(n), format_g17(exact), format_g17(approx),
                                 format_g17(std::abs(exact - approx))});
    }
    out.write("bon_kl.csv", kl_table.to_string());

    const std::uint64_t seed = cfg.seeds.front();
    const LabData data = make_lab_data(cfg, seed);
    RmPool pool = make_pretrained_base(cfg, data, seed);
    train_pool_runs(pool, cfg, data, seed, cfg.finetune.n_runs, jobs);
    std::vector<std::pair<Weights, double>> candidates;
    for (const auto& run : pool.runs) candidates.emplace_back(run.weights, run.id_val_acc);
    const int m = std::min(cfg.bon.warm_m, cfg.finetune.n_runs);
    const Weights warm = select_top_m(candidates, m);

    write_weights_json(out.root / "warm_weights.json", warm);
    out.track("warm_weights.json");

    const PolicyState policy =
        PolicyState::init(GaussianPolicy::uniform(cfg.world.feature_count, cfg.rl.policy_sigma0));
    const int max_n = *std::max_element(cfg.bon.n_values.begin(), cfg.bon.n_values.end());
    RngState rng = RngState::from_seed(seed, 0xb0f);

    const std::size_t n_prompts = static_cast<std::size_t>(cfg.bon.n_prompts);
    const std::size_t n_levels = cfg.bon.n_values.size();
    std::vector<Vec> oracle_at(n_levels, Vec(n_prompts, 0.0));
    std::vector<Vec> proxy_at(n_levels, Vec(n_prompts, 0.0));
    parallel_jobs(static_cast<int>(n_prompts), jobs, [&](int p) {
        RngState prompt_rng = rng.substream(static_cast<std::uint64_t>(p));
        const std::vector<Item> cands =
            policy_sample(policy, cfg.world, data.bank, static_cast<std::size_t>(max_n),
                          prompt_rng);
        for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
            const auto n = static_cast<std::size_t>(cfg.bon.n_values[lvl]);
            const Item& best = best_of_n([&](const Item& it) { return forward(warm, it); },
                                         std::span<const Item>(cands.data(), n));
            oracle_at[lvl][static_cast<std::size_t>(p)] =
                oracle_reward(cfg.world, data.bank, best);
            proxy_at[lvl][static_cast<std::size_t>(p)] = forward(warm, best);
        }
    });

    std::vector<BonSweepRow> rows;
    for (std::size_t lvl = 0; lvl < n_levels; ++lvl) {
        BonSweepRow row;
        row.n = cfg.bon.n_values[lvl];
        row.kl_approx = bon_kl_approx(row.n);
        double so = 0.0, sp = 0.0;
        for (std::size_t p = 0; p < n_prompts; ++p) {
            so += oracle_at[lvl][p];
            sp += proxy_at[lvl][p];
        }
        row.mean_oracle = so / static_cast<double>(n_prompts);
        row.mean_proxy = sp / static_cast<double>(n_prompts);
        rows.push_back(row);
        std::cout << "exp-bon: N=" << row.n << " mean_oracle=" << row.mean_oracle << "\n";
    }
    write_bon_sweep_csv(out.root / "bon_sweep.csv", rows);
    out.track("bon_sweep.csv");
}

void run_exp_rl(const ExperimentConfig& cfg_in, OutputTracker& out, int jobs) {
    const ExperimentConfig cfg = hacking_recipe(cfg_in);
    const std::uint64_t seed = cfg.seeds.front();
    const LabData data = make_lab_data(cfg, seed);
    RmPool pool = make_pretrained_base(cfg, data, seed);
    train_pool_runs(pool, cfg, data, seed, cfg.finetune.n_runs, jobs);

    std::vector<std::pair<Weights, double>> candidates;
    for (const auto& run : pool.runs) candidates.emplace_back(run.weights, run.id_val_acc);
    const Weights single = pool.runs[pool.ranked_by_val().front()].weights;
    const int m = std::min(cfg.rl.warm_m, cfg.finetune.n_runs);
    const Weights warm = select_top_m(candidates, m);

    write_weights_json(out.root / "single_weights.json", single);
    out.track("single_weights.json");
    write_weights_json(out.root / "warm_weights.json", warm);
    out.track("warm_weights.json");

    struct Job {
        const char* arm;
        const Weights* proxy;
        std::size_t alpha_idx;
        int rl_seed;
    };
    std::vector<Job> job_list;
    for (std::size_t ai = 0; ai < cfg.rl.ablation_alphas.size(); ++ai) {
        for (int s = 0; s < cfg.rl.n_seeds; ++s) {
            job_list.push_back({"single", &single, ai, s});
            job_list.push_back({"warm", &warm, ai, s});
        }
    }

    std::vector<Trajectory> trajectories(job_list.size());
    parallel_jobs(static_cast<int>(job_list.size()), jobs, [&](int j) {
        const Job& job = job_list[static_cast<std::size_t>(j)];
        RlConfig rl;
        rl.alpha = cfg.rl.ablation_alphas[job.alpha_idx];
        rl.learning_rate = cfg.rl.learning_rate;
        rl.steps = cfg.rl.steps;
        rl.batch_size = cfg.rl.batch_size;
        rl.baseline_decay = cfg.rl.baseline_decay;
        rl.eval_interval = cfg.rl.eval_interval;
        const PolicyState init = PolicyState::init(
            GaussianPolicy::uniform(cfg.world.feature_count, cfg.rl.policy_sigma0));
        RngState rng = RngState::from_seed(seed, kRlStream)
                           .substream(job.alpha_idx * 1000 +
                                      static_cast<std::uint64_t>(job.rl_seed) * 2 +
                                      (std::string(job.arm) == "warm" ? 1 : 0));
        const Weights& proxy_w = *job.proxy;
        auto [state, traj] = reinforce_run(
            init, [&](const Item& it) { return forward(proxy_w, it); }, rl, cfg.world, data.bank,
            rng);
        trajectories[static_cast<std::size_t>(j)] = std::move(traj);
    });

    CsvTable summary;
    summary.header = {"arm",       "alpha",      "rl_seed",     "peak_oracle",
                      "peak_step", "collapse_step", "final_proxy", "final_oracle"};
    for (std::size_t j = 0; j < job_list.size(); ++j) {
        const Job& job = job_list[j];
        const Trajectory& traj = trajectories[j];
        const double alpha = cfg.rl.ablation_alphas[job.alpha_idx];
        std::string rel = std::string("traj_") + job.arm + "_a" + std::to_string(job.alpha_idx) +
                          "_s" + std::to_string(job.rl_seed) + ".csv";
        write_trajectory_csv(out.root / rel, traj);
        out.track(rel);

        const HackingReport rep = hacking_report(traj, cfg.rl.hack_delta);
        summary.rows.push_back(
            {job.arm, format_g17(alpha), std::to_string(job.rl_seed),
             format_g17(rep.peak_oracle), std::to_string(rep.peak_step),
             rep.collapse_step ? std::to_string(*rep.collapse_step) : "none",
             format_g17(rep.final_proxy), format_g17(rep.final_oracle)});
    }
    out.write("hacking_summary.csv", summary.to_string());
    std::cout << "exp-rl: wrote " << job_list.size() << " trajectories\n";
}

}  // namespace

int run_preset(const std::string& name, const ExperimentConfig& cfg,
               const std::filesystem::path& out_dir, int jobs) {
    const auto& names = preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw std::invalid_argument("unknown preset: " + name);
    }
    std::filesystem::create_directories(out_dir);
    OutputTracker out(out_dir);
    out.write("config_normalized.json", cfg.to_json());
    try {
        if (name == "exp-theory") run_exp_theory(cfg, out, jobs);
        else if (name == "exp-lmc") run_exp_lmc(cfg, out, jobs);
        else if (name == "exp-corrupt") run_exp_corrupt(cfg, out, jobs);
        else if (name == "exp-select") run_exp_select(cfg, out, jobs);
        else if (name == "exp-bon") run_exp_bon(cfg, out, jobs);
        else if (name == "exp-rl") run_exp_rl(cfg, out, jobs);
    } catch (const std::exception& e) {
        std::cerr << name << ": check failed: " << e.what() << "\n";
        out.write_manifest(name, cfg);
        return 1;
    }
    out.write_manifest(name, cfg);
    return 0;
}

}  // namespace warm
