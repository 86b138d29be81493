#include "warm/world.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "warm/io.hpp"

namespace warm {

std::string to_string(SubsetTag tag) {
    switch (tag) {
        case SubsetTag::TrainClean: return "train_clean";
        case SubsetTag::TrainCorrupt: return "train_corrupt";
        case SubsetTag::IdVal: return "id_val";
        case SubsetTag::OodTest: return "ood_test";
    }
    throw std::invalid_argument("unknown subset tag");
}

SubsetTag subset_tag_from_string(const std::string& s) {
    if (s == "train_clean") return SubsetTag::TrainClean;
    if (s == "train_corrupt") return SubsetTag::TrainCorrupt;
    if (s == "id_val") return SubsetTag::IdVal;
    if (s == "ood_test") return SubsetTag::OodTest;
    throw std::invalid_argument("unknown subset tag: " + s);
}

WorldSpec WorldSpec::desk_default() {
    WorldSpec spec;
    spec.feature_count = 8;
    spec.feature_dim = 16;
    spec.norms.assign(8, 1.0);
    spec.causal_mask = {1, 1, 0, 0, 0, 0, 0, 0};
    spec.causal_weights = {1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    return spec;
}

int WorldSpec::spurious_feature() const {
    for (int j = 0; j < feature_count; ++j) {
        if (!causal_mask[static_cast<std::size_t>(j)]) return j;
    }
    throw std::invalid_argument("WorldSpec: no non-causal feature");
}

void WorldSpec::validate() const {
    if (feature_count < 1) throw std::invalid_argument("WorldSpec: F must be >= 1");
    if (feature_count > feature_dim) throw std::invalid_argument("WorldSpec: requires F <= d");
    const auto f = static_cast<std::size_t>(feature_count);
    if (norms.size() != f) throw std::invalid_argument("WorldSpec: norms must have F entries");
    if (causal_mask.size() != f)
        throw std::invalid_argument("WorldSpec: causal_mask must have F entries");
    if (causal_weights.size() != f)
        throw std::invalid_argument("WorldSpec: causal_weights must have F entries");
    bool any_causal = false;
    bool any_spurious = false;
    for (std::size_t j = 0; j < f; ++j) {
        if (!(norms[j] > 0.0)) throw std::invalid_argument("WorldSpec: norms must be > 0");
        if (causal_mask[j]) {
            any_causal = true;
            if (!(causal_weights[j] > 0.0))
                throw std::invalid_argument("WorldSpec: causal weights must be > 0 on causal features");
        } else {
            any_spurious = true;
        }
    }
    if (!any_causal) throw std::invalid_argument("WorldSpec: needs at least one causal feature");
    if (!any_spurious)
        throw std::invalid_argument("WorldSpec: needs at least one non-causal feature");
    if (!(sigma_train >= 0.0)) throw std::invalid_argument("WorldSpec: sigma_train must be >= 0");
    if (!(sigma_ood >= 0.0)) throw std::invalid_argument("WorldSpec: sigma_ood must be >= 0");
    if (!(rho_spur >= 0.0 && rho_spur <= 1.0))
        throw std::invalid_argument("WorldSpec: rho_spur must be in [0,1]");
    if (!(spur_intensity_lo > 0.0 && spur_intensity_hi >= spur_intensity_lo))
        throw std::invalid_argument("WorldSpec: requires 0 < spur_intensity_lo <= spur_intensity_hi");
    if (!(budget > 0.0)) throw std::invalid_argument("WorldSpec: budget must be > 0");
}

FeatureBank make_feature_bank(int feature_count, int feature_dim, const Vec& norms,
                              RngState& rng) {
    if (feature_count > feature_dim) {
        throw std::invalid_argument("make_feature_bank: requires F <= d");
    }
    const auto f = static_cast<std::size_t>(feature_count);
    const auto d = static_cast<std::size_t>(feature_dim);
    FeatureBank bank;
    bank.feature_count = feature_count;
    bank.feature_dim = feature_dim;
    bank.z.assign(f * d, 0.0);

    for (std::size_t j = 0; j < f; ++j) {
        std::span<double> zj{bank.z.data() + j * d, d};
        while (true) {
            for (auto& v : zj) v = rng.gaussian();
            // Project out the previous directions (zero-norm features span
            // nothing and are skipped).
            for (std::size_t k = 0; k < j; ++k) {
                std::span<const double> zk{bank.z.data() + k * d, d};
                const double zk_sq = norm2_sq(zk);
                if (zk_sq == 0.0) continue;
                axpy(-dot(zj, zk) / zk_sq, zk, zj);
            }
            const double len = std::sqrt(norm2_sq(zj));
            if (len > 1e-8) {  // redraw on (measure-zero) degenerate residual
                const double scale = norms[j] / len;
                for (auto& v : zj) v *= scale;
                break;
            }
        }
    }
    return bank;
}

FeatureBank make_feature_bank(const WorldSpec& spec, RngState& rng) {
    spec.validate();
    return make_feature_bank(spec.feature_count, spec.feature_dim, spec.norms, rng);
}

double oracle_reward(const WorldSpec& spec, const FeatureBank& bank, const Item& item) {
    const auto f = static_cast<std::size_t>(spec.feature_count);
    const auto d = static_cast<std::size_t>(spec.feature_dim);
    if (bank.feature_count != spec.feature_count || bank.feature_dim != spec.feature_dim ||
        item.x.size() != f * d) {
        throw std::invalid_argument("oracle_reward: dimension mismatch");
    }
    double r = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
        if (!spec.causal_mask[j]) continue;
        std::span<const double> zj = bank.feature(static_cast<int>(j));
        std::span<const double> xj{item.x.data() + j * d, d};
        r += spec.causal_weights[j] * dot(zj, xj) / norm2_sq(zj);
    }
    return r;
}

Item sample_item(const WorldSpec& spec, const FeatureBank& bank, const Vec& intensities,
                 double y, double sigma, RngState& rng) {
    const auto f = static_cast<std::size_t>(spec.feature_count);
    const auto d = static_cast<std::size_t>(spec.feature_dim);
    if (intensities.size() != f) {
        throw std::invalid_argument("sample_item: intensity vector must have F entries");
    }
    Item item;
    item.intensity = intensities;
    item.y = y;
    item.x.resize(f * d);
    for (std::size_t j = 0; j < f; ++j) {
        std::span<const double> zj = bank.feature(static_cast<int>(j));
        const double a = intensities[j] * y;
        for (std::size_t k = 0; k < d; ++k) {
            item.x[j * d + k] = a * zj[k] + sigma * rng.gaussian();
        }
    }
    return item;
}

namespace {

// Redraws one feature block in place at the given intensity.
void redraw_block(const WorldSpec& spec, const FeatureBank& bank, Item& item, int j,
                  double intensity, double sigma, RngState& rng) {
    const auto d = static_cast<std::size_t>(spec.feature_dim);
    std::span<const double> zj = bank.feature(j);
    item.intensity[static_cast<std::size_t>(j)] = intensity;
    const double a = intensity * item.y;
    for (std::size_t k = 0; k < d; ++k) {
        item.x[static_cast<std::size_t>(j) * d + k] = a * zj[k] + sigma * rng.gaussian();
    }
}

Vec draw_intensities(const WorldSpec& spec, int skip_feature, RngState& rng) {
    Vec a(static_cast<std::size_t>(spec.feature_count), 0.0);
    for (int j = 0; j < spec.feature_count; ++j) {
        if (j == skip_feature) continue;
        const bool present = rng.uniform() < 0.5;
        // Uniform(0.5, 1.5) magnitude keeps oracle margins away from zero.
        a[static_cast<std::size_t>(j)] = present ? rng.uniform(0.5, 1.5) : 0.0;
    }
    return a;
}

}  // namespace

std::vector<PreferencePair> gen_preference_data(const WorldSpec& spec, const FeatureBank& bank,
                                                std::size_t n_pairs, SubsetTag split,
                                                RngState& rng) {
    spec.validate();
    if (n_pairs < 1) throw std::invalid_argument("gen_preference_data: n_pairs must be >= 1");
    if (split == SubsetTag::TrainCorrupt) {
        throw std::invalid_argument("gen_preference_data: corruption is applied by corrupt_labels");
    }
    const double sigma = split == SubsetTag::OodTest ? spec.sigma_ood : spec.sigma_train;
    const double rho = split == SubsetTag::OodTest ? 0.5 : spec.rho_spur;
    const int spur = spec.spurious_feature();

    std::vector<PreferencePair> out;
    out.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        RngState pr = rng.substream(i);
        Item a, b;
        double ra = 0.0, rb = 0.0;
        do {
            a = sample_item(spec, bank, draw_intensities(spec, spur, pr), 1.0, sigma, pr);
            b = sample_item(spec, bank, draw_intensities(spec, spur, pr), 1.0, sigma, pr);
            ra = oracle_reward(spec, bank, a);
            rb = oracle_reward(spec, bank, b);
        } while (ra == rb);

        PreferencePair pair;
        pair.prompt_id = i;
        pair.subset = split == SubsetTag::OodTest ? SubsetTag::OodTest
                     : split == SubsetTag::IdVal  ? SubsetTag::IdVal
                                                  : SubsetTag::TrainClean;
        pair.item_plus = ra > rb ? std::move(a) : std::move(b);
        pair.item_minus = ra > rb ? std::move(b) : std::move(a);
        pair.label = PreferencePair::Label::Plus;
        pair.corrupted = false;

        // The spurious feature rides with the preferred item with probability
        // rho and with the rejected one otherwise; the oracle never reads it,
        // so the labels above stay valid.
        const bool on_preferred = pr.uniform() < rho;
        const double spur_intensity = pr.uniform(spec.spur_intensity_lo, spec.spur_intensity_hi);
        Item& carrier = on_preferred ? pair.item_plus : pair.item_minus;
        Item& other = on_preferred ? pair.item_minus : pair.item_plus;
        redraw_block(spec, bank, carrier, spur, spur_intensity, sigma, pr);
        redraw_block(spec, bank, other, spur, 0.0, sigma, pr);

        out.push_back(std::move(pair));
    }
    return out;
}

std::vector<PreferencePair> corrupt_labels(std::vector<PreferencePair> data, double rate,
                                           RngState& rng) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw std::invalid_argument("corrupt_labels: rate must be in [0,1]");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        PreferencePair& pair = data[i];
        if (!is_train(pair.subset)) continue;
        RngState pr = rng.substream(i);
        if (pr.uniform() < rate) {
            pair.label = pair.label == PreferencePair::Label::Plus ? PreferencePair::Label::Minus
                                                                   : PreferencePair::Label::Plus;
            pair.corrupted = true;
            pair.subset = SubsetTag::TrainCorrupt;
        } else {
            pair.corrupted = false;
            pair.subset = SubsetTag::TrainClean;
        }
    }
    return data;
}

namespace {

void append_array_g17(std::string& out, const Vec& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_g17(v[i]);
    }
    out += ']';
}

}  // namespace

void write_dataset_jsonl(const std::filesystem::path& path,
                         std::span<const PreferencePair> data) {
    std::string out;
    for (const auto& pair : data) {
        out += "{\"prompt_id\":" + std::to_string(pair.prompt_id);
        out += ",\"x_plus\":";
        append_array_g17(out, pair.item_plus.x);
        out += ",\"x_minus\":";
        append_array_g17(out, pair.item_minus.x);
        out += ",\"label\":\"";
        out += pair.label == PreferencePair::Label::Plus ? "plus" : "minus";
        out += "\",\"corrupted\":";
        out += pair.corrupted ? "true" : "false";
        out += ",\"subset_tag\":\"" + to_string(pair.subset) + "\"}\n";
    }
    write_text_file(path, out);
}

std::vector<PreferencePair> read_dataset_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<PreferencePair> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json rec = nlohmann::json::parse(line);
        PreferencePair pair;
        pair.prompt_id = rec.at("prompt_id").get<std::uint64_t>();
        pair.item_plus.x = rec.at("x_plus").get<Vec>();
        pair.item_minus.x = rec.at("x_minus").get<Vec>();
        pair.label = rec.at("label").get<std::string>() == "plus" ? PreferencePair::Label::Plus
                                                                  : PreferencePair::Label::Minus;
        pair.corrupted = rec.at("corrupted").get<bool>();
        pair.subset = subset_tag_from_string(rec.at("subset_tag").get<std::string>());
        out.push_back(std::move(pair));
    }
    return out;
}

}  // namespace warm
