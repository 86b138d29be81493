#include "warm/config.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "warm/io.hpp"
#include "warm/theory.hpp"

namespace warm {
namespace {

using nlohmann::json;

// Collects "<path>: <message>" entries while walking the document.
struct Walker {
    std::vector<std::string>& errors;

    void fail(const std::string& path, const std::string& message) {
        errors.push_back(path + ": " + message);
    }

    template <typename T>
    void get(const json& obj, const std::string& path, const char* key, T& out) {
        if (!obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            fail(path + "/" + key, "wrong type");
        }
    }

    void check_known(const json& obj, const std::string& path,
                     std::initializer_list<const char*> known) {
        if (!obj.is_object()) {
            fail(path.empty() ? "/" : path, "expected an object");
            return;
        }
        for (const auto& [key, value] : obj.items()) {
            bool found = false;
            for (const char* k : known) {
                if (key == k) {
                    found = true;
                    break;
                }
            }
            if (!found) fail(path + "/" + key, "unknown key");
        }
    }
};

void parse_world(Walker& w, const json& obj, WorldSpec& world) {
    w.check_known(obj, "/world",
                  {"F", "d", "norms", "causal_mask", "causal_weights", "sigma_train",
                   "sigma_ood", "rho_spur", "spur_intensity_lo", "spur_intensity_hi",
                   "budget"});
    if (!obj.is_object()) return;
    w.get(obj, "/world", "F", world.feature_count);
    w.get(obj, "/world", "d", world.feature_dim);
    w.get(obj, "/world", "norms", world.norms);
    std::vector<int> mask;
    if (obj.contains("causal_mask")) {
        w.get(obj, "/world", "causal_mask", mask);
        world.causal_mask.assign(mask.size(), 0);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            world.causal_mask[i] = mask[i] ? 1 : 0;
        }
    }
    w.get(obj, "/world", "causal_weights", world.causal_weights);
    w.get(obj, "/world", "sigma_train", world.sigma_train);
    w.get(obj, "/world", "sigma_ood", world.sigma_ood);
    w.get(obj, "/world", "rho_spur", world.rho_spur);
    w.get(obj, "/world", "spur_intensity_lo", world.spur_intensity_lo);
    w.get(obj, "/world", "spur_intensity_hi", world.spur_intensity_hi);
    w.get(obj, "/world", "budget", world.budget);

    // If F changed but the per-feature vectors did not, resize the defaults
    // rather than reporting a size mismatch the user never wrote.
    const auto f = static_cast<std::size_t>(world.feature_count);
    if (!obj.contains("norms") && world.norms.size() != f) world.norms.assign(f, 1.0);
}

}  // namespace

std::string ExperimentConfig::to_json() const {
    json world_j{{"F", world.feature_count},
                 {"d", world.feature_dim},
                 {"norms", world.norms},
                 {"causal_weights", world.causal_weights},
                 {"sigma_train", world.sigma_train},
                 {"sigma_ood", world.sigma_ood},
                 {"rho_spur", world.rho_spur},
                 {"spur_intensity_lo", world.spur_intensity_lo},
                 {"spur_intensity_hi", world.spur_intensity_hi},
                 {"budget", world.budget}};
    std::vector<int> mask(world.causal_mask.begin(), world.causal_mask.end());
    world_j["causal_mask"] = mask;

    json doc{
        {"world", world_j},
        {"corruption", corruption},
        {"pretrain",
         {{"n_pairs", pretrain.n_pairs},
          {"steps", pretrain.steps},
          {"snapshot_steps", pretrain.snapshot_steps},
          {"learning_rate", pretrain.learning_rate},
          {"batch_size", pretrain.batch_size},
          {"sigma_scale", pretrain.sigma_scale}}},
        {"finetune",
         {{"n_train", finetune.n_train},
          {"n_id_val", finetune.n_id_val},
          {"n_ood", finetune.n_ood},
          {"steps", finetune.steps},
          {"corrupt_steps", finetune.corrupt_steps},
          {"batch_size", finetune.batch_size},
          {"learning_rates", finetune.learning_rates},
          {"dropouts", finetune.dropouts},
          {"n_runs", finetune.n_runs},
          {"eval_interval", finetune.eval_interval},
          {"probe_steps", finetune.probe_steps},
          {"probe_lr", finetune.probe_lr},
          {"hidden", finetune.hidden}}},
        {"combine",
         {{"lambda_points", combine.lambda_points},
          {"n_rm_pairs", combine.n_rm_pairs},
          {"n_lmc_pairs", combine.n_lmc_pairs}}},
        {"theory",
         {{"p", theory.p},
          {"norms", theory.norms},
          {"feature_dim", theory.feature_dim},
          {"sigma", theory.sigma},
          {"members", theory.members},
          {"n_items", theory.n_items}}},
        {"bon",
         {{"n_values", bon.n_values},
          {"n_prompts", bon.n_prompts},
          {"kl_pool", bon.kl_pool},
          {"warm_m", bon.warm_m}}},
        {"rl",
         {{"alpha", rl.alpha},
          {"ablation_alphas", rl.ablation_alphas},
          {"learning_rate", rl.learning_rate},
          {"steps", rl.steps},
          {"batch_size", rl.batch_size},
          {"baseline_decay", rl.baseline_decay},
          {"eval_interval", rl.eval_interval},
          {"warm_m", rl.warm_m},
          {"n_seeds", rl.n_seeds},
          {"policy_sigma0", rl.policy_sigma0},
          {"hack_delta", rl.hack_delta},
          {"causal_norm", rl.causal_norm},
          {"spur_norm", rl.spur_norm}}},
        {"seeds", seeds},
    };
    return doc.dump(2) + "\n";
}

ConfigResult validate_config_text(const std::string& text) {
    ConfigResult result;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        result.errors.push_back("/: parse error: " + std::string(e.what()));
        return result;
    }

    Walker w{result.errors};
    w.check_known(doc, "",
                  {"world", "corruption", "pretrain", "finetune", "combine", "theory", "bon",
                   "rl", "seeds"});
    if (!doc.is_object()) return result;

    ExperimentConfig& cfg = result.config;
    if (doc.contains("world")) parse_world(w, doc["world"], cfg.world);
    w.get(doc, "", "corruption", cfg.corruption);
    if (doc.contains("pretrain")) {
        const json& p = doc["pretrain"];
        w.check_known(p, "/pretrain",
                      {"n_pairs", "steps", "snapshot_steps", "learning_rate", "batch_size",
                       "sigma_scale"});
        w.get(p, "/pretrain", "n_pairs", cfg.pretrain.n_pairs);
        w.get(p, "/pretrain", "steps", cfg.pretrain.steps);
        w.get(p, "/pretrain", "snapshot_steps", cfg.pretrain.snapshot_steps);
        w.get(p, "/pretrain", "learning_rate", cfg.pretrain.learning_rate);
        w.get(p, "/pretrain", "batch_size", cfg.pretrain.batch_size);
        w.get(p, "/pretrain", "sigma_scale", cfg.pretrain.sigma_scale);
    }
    if (doc.contains("finetune")) {
        const json& p = doc["finetune"];
        w.check_known(p, "/finetune",
                      {"n_train", "n_id_val", "n_ood", "steps", "corrupt_steps", "batch_size",
                       "learning_rates", "dropouts", "n_runs", "eval_interval", "probe_steps",
                       "probe_lr", "hidden"});
        w.get(p, "/finetune", "n_train", cfg.finetune.n_train);
        w.get(p, "/finetune", "n_id_val", cfg.finetune.n_id_val);
        w.get(p, "/finetune", "n_ood", cfg.finetune.n_ood);
        w.get(p, "/finetune", "steps", cfg.finetune.steps);
        w.get(p, "/finetune", "corrupt_steps", cfg.finetune.corrupt_steps);
        w.get(p, "/finetune", "batch_size", cfg.finetune.batch_size);
        w.get(p, "/finetune", "learning_rates", cfg.finetune.learning_rates);
        w.get(p, "/finetune", "dropouts", cfg.finetune.dropouts);
        w.get(p, "/finetune", "n_runs", cfg.finetune.n_runs);
        w.get(p, "/finetune", "eval_interval", cfg.finetune.eval_interval);
        w.get(p, "/finetune", "probe_steps", cfg.finetune.probe_steps);
        w.get(p, "/finetune", "probe_lr", cfg.finetune.probe_lr);
        w.get(p, "/finetune", "hidden", cfg.finetune.hidden);
    }
    if (doc.contains("combine")) {
        const json& p = doc["combine"];
        w.check_known(p, "/combine", {"lambda_points", "n_rm_pairs", "n_lmc_pairs"});
        w.get(p, "/combine", "lambda_points", cfg.combine.lambda_points);
        w.get(p, "/combine", "n_rm_pairs", cfg.combine.n_rm_pairs);
        w.get(p, "/combine", "n_lmc_pairs", cfg.combine.n_lmc_pairs);
    }
    if (doc.contains("theory")) {
        const json& p = doc["theory"];
        w.check_known(p, "/theory", {"p", "norms", "feature_dim", "sigma", "members", "n_items"});
        w.get(p, "/theory", "p", cfg.theory.p);
        w.get(p, "/theory", "norms", cfg.theory.norms);
        w.get(p, "/theory", "feature_dim", cfg.theory.feature_dim);
        w.get(p, "/theory", "sigma", cfg.theory.sigma);
        w.get(p, "/theory", "members", cfg.theory.members);
        w.get(p, "/theory", "n_items", cfg.theory.n_items);
    }
    if (doc.contains("bon")) {
        const json& p = doc["bon"];
        w.check_known(p, "/bon", {"n_values", "n_prompts", "kl_pool", "warm_m"});
        w.get(p, "/bon", "n_values", cfg.bon.n_values);
        w.get(p, "/bon", "n_prompts", cfg.bon.n_prompts);
        w.get(p, "/bon", "kl_pool", cfg.bon.kl_pool);
        w.get(p, "/bon", "warm_m", cfg.bon.warm_m);
    }
    if (doc.contains("rl")) {
        const json& p = doc["rl"];
        w.check_known(p, "/rl",
                      {"alpha", "ablation_alphas", "learning_rate", "steps", "batch_size",
                       "baseline_decay", "eval_interval", "warm_m", "n_seeds", "policy_sigma0",
                       "hack_delta", "causal_norm", "spur_norm"});
        w.get(p, "/rl", "alpha", cfg.rl.alpha);
        w.get(p, "/rl", "ablation_alphas", cfg.rl.ablation_alphas);
        w.get(p, "/rl", "learning_rate", cfg.rl.learning_rate);
        w.get(p, "/rl", "steps", cfg.rl.steps);
        w.get(p, "/rl", "batch_size", cfg.rl.batch_size);
        w.get(p, "/rl", "baseline_decay", cfg.rl.baseline_decay);
        w.get(p, "/rl", "eval_interval", cfg.rl.eval_interval);
        w.get(p, "/rl", "warm_m", cfg.rl.warm_m);
        w.get(p, "/rl", "n_seeds", cfg.rl.n_seeds);
        w.get(p, "/rl", "policy_sigma0", cfg.rl.policy_sigma0);
        w.get(p, "/rl", "hack_delta", cfg.rl.hack_delta);
        w.get(p, "/rl", "causal_norm", cfg.rl.causal_norm);
        w.get(p, "/rl", "spur_norm", cfg.rl.spur_norm);
    }
    w.get(doc, "", "seeds", cfg.seeds);

    // Semantic checks on the assembled config.
    try {
        cfg.world.validate();
    } catch (const std::invalid_argument& e) {
        w.fail("/world", e.what());
    }
    if (!(cfg.corruption >= 0.0 && cfg.corruption <= 1.0)) {
        w.fail("/corruption", "must be in [0,1]");
    }
    if (cfg.seeds.empty()) w.fail("/seeds", "must be nonempty");
    if (cfg.finetune.n_runs < 1) w.fail("/finetune/n_runs", "must be >= 1");
    if (cfg.finetune.hidden < 1) w.fail("/finetune/hidden", "must be >= 1");
    if (cfg.finetune.learning_rates.empty()) w.fail("/finetune/learning_rates", "must be nonempty");
    if (cfg.finetune.dropouts.empty()) w.fail("/finetune/dropouts", "must be nonempty");
    if (cfg.pretrain.snapshot_steps.empty()) w.fail("/pretrain/snapshot_steps", "must be nonempty");
    for (int s : cfg.pretrain.snapshot_steps) {
        if (s < 1 || s > cfg.pretrain.steps) {
            w.fail("/pretrain/snapshot_steps", "entries must lie in [1, steps]");
            break;
        }
    }
    if (!(cfg.rl.alpha >= 0.0)) w.fail("/rl/alpha", "must be >= 0");
    if (cfg.rl.n_seeds < 1) w.fail("/rl/n_seeds", "must be >= 1");
    if (cfg.bon.n_prompts < 1) w.fail("/bon/n_prompts", "must be >= 1");
    for (int n : cfg.bon.n_values) {
        if (n < 1) {
            w.fail("/bon/n_values", "entries must be >= 1");
            break;
        }
    }
    try {
        TheoryWorld tw{static_cast<int>(cfg.theory.p.size()), cfg.theory.feature_dim,
                       cfg.theory.p, cfg.theory.norms, cfg.theory.sigma};
        tw.validate();
    } catch (const std::invalid_argument& e) {
        w.fail("/theory", e.what());
    }
    return result;
}

ConfigResult validate_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        ConfigResult result;
        result.errors.push_back("/: " + std::string(e.what()));
        return result;
    }
    return validate_config_text(text);
}

}  // namespace warm
