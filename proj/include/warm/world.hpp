#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "warm/rng.hpp"
#include "warm/tensor.hpp"

namespace warm {

enum class SubsetTag { TrainClean, TrainCorrupt, IdVal, OodTest };

std::string to_string(SubsetTag tag);
SubsetTag subset_tag_from_string(const std::string& s);
inline bool is_train(SubsetTag tag) {
    return tag == SubsetTag::TrainClean || tag == SubsetTag::TrainCorrupt;
}

// The synthetic preference universe: F orthogonal features living in R^d,
// a causal subset that defines the ground-truth reward, one designated
// non-causal feature whose co-occurrence with the preferred item is the
// spurious-correlation knob, and noise scales for the in-distribution and
// shifted regimes.
struct WorldSpec {
    int feature_count = 8;                // F
    int feature_dim = 16;                 // d, F <= d
    Vec norms;                            // |z^j|, size F
    std::vector<std::uint8_t> causal_mask;  // size F
    Vec causal_weights;                   // w_j > 0 where causal, size F
    double sigma_train = 0.25;
    double sigma_ood = 0.5;
    double rho_spur = 0.9;                // P(spurious feature on preferred item), train/id_val
    // Intensity range of the spurious marker on whichever item carries it.
    double spur_intensity_lo = 0.5;
    double spur_intensity_hi = 1.5;
    double budget = 4.0;                  // total intensity handed to the generation policy

    static WorldSpec desk_default();

    // First non-causal feature; the one rho_spur controls.
    int spurious_feature() const;
    void validate() const;  // throws std::invalid_argument naming the violated invariant
};

struct FeatureBank {
    int feature_count = 0;
    int feature_dim = 0;
    Vec z;  // row-major F x d

    std::span<const double> feature(int j) const {
        return {z.data() + static_cast<std::size_t>(j) * feature_dim,
                static_cast<std::size_t>(feature_dim)};
    }
};

// An item is a bag of feature blocks: block j ~ N(a_j * y * z^j, sigma^2 I_d).
struct Item {
    Vec x;          // flat F x d
    Vec intensity;  // a_j >= 0, size F
    double y = 1.0; // latent polarity in {-1, +1}
};

struct PreferencePair {
    enum class Label { Plus, Minus };

    std::uint64_t prompt_id = 0;
    Item item_plus;   // oracle-preferred at generation time
    Item item_minus;
    Label label = Label::Plus;  // which item the dataset marks as preferred
    bool corrupted = false;
    SubsetTag subset = SubsetTag::TrainClean;

    const Item& labeled_preferred() const {
        return label == Label::Plus ? item_plus : item_minus;
    }
    const Item& labeled_rejected() const {
        return label == Label::Plus ? item_minus : item_plus;
    }
};

// Gram-Schmidt on Gaussian draws, rescaled to spec.norms.
FeatureBank make_feature_bank(const WorldSpec& spec, RngState& rng);
FeatureBank make_feature_bank(int feature_count, int feature_dim, const Vec& norms,
                              RngState& rng);

// Ground-truth reward: sum over causal features of w_j * (z^j . x^j) / |z^j|^2.
// Used for labeling and evaluation only; never for policy updates.
double oracle_reward(const WorldSpec& spec, const FeatureBank& bank, const Item& item);

// Draws an item with the given intensities at the given noise scale.
Item sample_item(const WorldSpec& spec, const FeatureBank& bank, const Vec& intensities,
                 double y, double sigma, RngState& rng);

// Two independently drawn items per pair, labeled by realized oracle reward
// (ties redrawn). The designated spurious feature lands on the preferred
// item with probability rho_spur in train/id_val splits and 0.5 in ood_test;
// ood_test additionally uses sigma_ood.
std::vector<PreferencePair> gen_preference_data(const WorldSpec& spec, const FeatureBank& bank,
                                                std::size_t n_pairs, SubsetTag split,
                                                RngState& rng);

// Independently swaps each train-split label with the given probability.
// Swapped pairs are retagged TrainCorrupt, their label now pointing at the
// oracle-worse item; untouched train pairs become TrainClean. Non-train
// pairs pass through unchanged.
std::vector<PreferencePair> corrupt_labels(std::vector<PreferencePair> data, double rate,
                                           RngState& rng);

// One JSON record per line: prompt_id, x_plus, x_minus, label, corrupted,
// subset_tag. Floats carry 17 significant digits and round-trip exactly.
void write_dataset_jsonl(const std::filesystem::path& path,
                         std::span<const PreferencePair> data);
std::vector<PreferencePair> read_dataset_jsonl(const std::filesystem::path& path);

}  // namespace warm
