#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "warm/config.hpp"
#include "warm/io.hpp"
#include "warm/presets.hpp"

using namespace warm;
namespace fs = std::filesystem;

namespace {

// Small enough to run every preset in seconds.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.world = WorldSpec::desk_default();
    cfg.pretrain.n_pairs = 256;
    cfg.pretrain.steps = 120;
    cfg.pretrain.snapshot_steps = {60, 90, 120};
    cfg.finetune.n_train = 256;
    cfg.finetune.n_id_val = 64;
    cfg.finetune.n_ood = 128;
    cfg.finetune.steps = 150;
    cfg.finetune.eval_interval = 50;
    cfg.finetune.n_runs = 6;
    cfg.combine.n_lmc_pairs = 2;
    cfg.combine.n_rm_pairs = 2;
    cfg.theory.members = 512;
    cfg.theory.n_items = 4;
    cfg.bon.n_values = {1, 2, 8};
    cfg.bon.n_prompts = 20;
    cfg.bon.kl_pool = 2000;
    cfg.bon.warm_m = 3;
    cfg.rl.steps = 60;
    cfg.rl.batch_size = 16;
    cfg.rl.eval_interval = 20;
    cfg.rl.n_seeds = 2;
    cfg.rl.ablation_alphas = {0.003};
    cfg.rl.warm_m = 3;
    cfg.seeds = {1, 2, 3};
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

// Manifest must list exactly the files in the directory (besides itself).
void check_manifest_covers_dir(const fs::path& dir) {
    const nlohmann::json manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    std::set<std::string> listed;
    for (const auto& [key, value] : manifest.at("files").items()) listed.insert(key);
    std::set<std::string> present;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), dir).string();
        if (rel == "manifest.json") continue;
        present.insert(rel);
    }
    CHECK(listed == present);
}

}  // namespace

TEST_CASE("unknown preset is rejected up front") {
    const ExperimentConfig cfg = tiny_config();
    CHECK_THROWS_AS(run_preset("exp-nope", cfg, fresh_dir("warm_nope"), 1),
                    std::invalid_argument);
}

TEST_CASE("exp-theory writes its report and manifest") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path dir = fresh_dir("warm_theory");
    REQUIRE(run_preset("exp-theory", cfg, dir, 1) == 0);
    CHECK(fs::exists(dir / "theory_rate.csv"));
    CHECK(fs::exists(dir / "config_normalized.json"));

    // The canonical p = [1, 0.5] world: closed forms 1.5 / 1.25 with the MC
    // estimates nearby (512 members here).
    const nlohmann::json report =
        nlohmann::json::parse(read_text_file(dir / "theory_report.json"));
    CHECK(report.at("ens_cf").get<double>() == 1.5);
    CHECK(report.at("wa_cf").get<double>() == 1.25);
    CHECK(std::abs(report.at("ens_mc").get<double>() - 1.5) <= 0.1);
    CHECK(std::abs(report.at("wa_mc").get<double>() - 1.25) <= 0.1);

    check_manifest_covers_dir(dir);
    fs::remove_all(dir);
}

TEST_CASE("exp-lmc writes one csv per pair with 11 lambda rows") {
    ExperimentConfig cfg = tiny_config();
    const fs::path dir = fresh_dir("warm_lmc");
    REQUIRE(run_preset("exp-lmc", cfg, dir, 2) == 0);
    for (int k = 0; k < cfg.combine.n_lmc_pairs; ++k) {
        const fs::path csv = dir / ("lmc_pair" + std::to_string(k) + ".csv");
        REQUIRE(fs::exists(csv));
        const std::string text = read_text_file(csv);
        CHECK(text.rfind("lambda,acc_wa,acc_ens,acc_diag\n", 0) == 0);
        std::size_t lines = 0;
        for (char c : text) lines += c == '\n';
        CHECK(lines == 12);  // header + 11 grid points

        // At lambda = 0 all three columns equal the first member's accuracy.
        std::istringstream rows(text);
        std::string header, first;
        std::getline(rows, header);
        std::getline(rows, first);
        std::string cell;
        std::istringstream cells(first);
        std::vector<std::string> fields;
        while (std::getline(cells, cell, ',')) fields.push_back(cell);
        REQUIRE(fields.size() == 4);
        CHECK(fields[0] == "0");
        CHECK(fields[1] == fields[2]);
        CHECK(fields[1] == fields[3]);
    }
    check_manifest_covers_dir(dir);
    fs::remove_all(dir);
}

TEST_CASE("exp-corrupt defaults to 25% corruption and writes gap rows") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path dir = fresh_dir("warm_corrupt");
    REQUIRE(run_preset("exp-corrupt", cfg, dir, 2) == 0);
    const std::string gaps = read_text_file(dir / "gaps.csv");
    CHECK(gaps.rfind("pair_id,subset,gap\n", 0) == 0);
    CHECK(gaps.find("train_corrupt") != std::string::npos);
    CHECK(gaps.find("mean,") != std::string::npos);
    CHECK(fs::exists(dir / "dataset_train.jsonl"));
    check_manifest_covers_dir(dir);
    fs::remove_all(dir);
}

TEST_CASE("exp-select reports top and bottom groups per seed") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path dir = fresh_dir("warm_select");
    REQUIRE(run_preset("exp-select", cfg, dir, 2) == 0);
    const std::string select = read_text_file(dir / "select.csv");
    CHECK(select.find("top6") != std::string::npos);
    CHECK(select.find("bottom6") != std::string::npos);
    check_manifest_covers_dir(dir);
    fs::remove_all(dir);
}

TEST_CASE("exp-bon writes the kl table and the sweep") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path dir = fresh_dir("warm_bon");
    REQUIRE(run_preset("exp-bon", cfg, dir, 2) == 0);
    const std::string kl = read_text_file(dir / "bon_kl.csv");
    CHECK(kl.rfind("N,kl_exact,kl_approx,abs_diff\n", 0) == 0);
    const std::string sweep = read_text_file(dir / "bon_sweep.csv");
    CHECK(sweep.rfind("N,kl_approx,mean_oracle,mean_proxy\n", 0) == 0);
    CHECK(fs::exists(dir / "warm_weights.json"));
    check_manifest_covers_dir(dir);
    fs::remove_all(dir);
}

TEST_CASE("exp-rl writes trajectories and the hacking summary") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path dir = fresh_dir("warm_rl");
    REQUIRE(run_preset("exp-rl", cfg, dir, 2) == 0);
    CHECK(fs::exists(dir / "traj_single_a0_s0.csv"));
    CHECK(fs::exists(dir / "traj_warm_a0_s1.csv"));
    const std::string summary = read_text_file(dir / "hacking_summary.csv");
    CHECK(summary.rfind("arm,alpha,rl_seed,peak_oracle,peak_step,collapse_step,final_proxy,"
                        "final_oracle\n",
                        0) == 0);
    check_manifest_covers_dir(dir);
    fs::remove_all(dir);
}

TEST_CASE("preset reruns are byte-identical") {
    const ExperimentConfig cfg = tiny_config();
    const fs::path dir1 = fresh_dir("warm_det1");
    const fs::path dir2 = fresh_dir("warm_det2");
    REQUIRE(run_preset("exp-theory", cfg, dir1, 1) == 0);
    REQUIRE(run_preset("exp-theory", cfg, dir2, 2) == 0);
    CHECK(read_text_file(dir1 / "theory_report.json") ==
          read_text_file(dir2 / "theory_report.json"));
    CHECK(read_text_file(dir1 / "theory_rate.csv") == read_text_file(dir2 / "theory_rate.csv"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}
