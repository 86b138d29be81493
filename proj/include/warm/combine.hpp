#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "warm/parallel.hpp"
#include "warm/reward_net.hpp"
#include "warm/world.hpp"

namespace warm {

using RewardFn = std::function<double(const Item&)>;

// Element-wise convex combination of parameter vectors; uniform when coeffs
// is empty. Exact guarantees: a single surviving unit coefficient returns
// that member bit for bit, identical members return themselves, and members
// are summed in a canonical order so permuting (members, coeffs) together
// cannot change the result.
Weights weight_average(std::span<const Weights> members, std::span<const double> coeffs = {});

// Convex combination of member forward passes.
double ensemble_reward(std::span<const Weights> members, std::span<const double> coeffs,
                       const Item& item);

// Fraction of pairs with r(labeled-preferred) >= r(other). Ties count as
// correct, matching the >= in the accuracy definition; a constant reward
// therefore scores 1.0.
double pairwise_accuracy(const RewardFn& reward, std::span<const PreferencePair> data,
                         Exec exec = Exec::Parallel);
double pairwise_accuracy(const Weights& w, std::span<const PreferencePair> data,
                         Exec exec = Exec::Parallel);

struct LmcRow {
    double lambda = 0.0;
    double acc_wa = 0.0;
    double acc_ens = 0.0;
    double acc_diag = 0.0;
};

// Accuracy along the segment between two fine-tuned weight vectors: the
// interpolated model, the prediction mixture, and the straight line between
// the endpoint accuracies.
std::vector<LmcRow> lmc_curve(const Weights& w1, const Weights& w2,
                              std::span<const PreferencePair> data,
                              std::span<const double> lambda_grid);

std::vector<double> default_lambda_grid(int points = 11);

struct SubsetGapRow {
    int pair_id = 0;
    SubsetTag subset = SubsetTag::TrainClean;
    double gap = 0.0;  // acc_WA - acc_ENS at lambda = 0.5
};

struct SubsetGapReport {
    std::vector<SubsetGapRow> rows;
    std::map<SubsetTag, double> mean_gap;
};

// Per-pair, per-subset acc_WA - acc_ENS at the midpoint, plus means. The
// data must carry all four subset tags.
SubsetGapReport subset_gap_report(std::span<const std::pair<Weights, Weights>> rm_pairs,
                                  std::span<const PreferencePair> data);

// Sorts candidates by validation accuracy (descending, stable) and uniformly
// averages the best M.
Weights select_top_m(std::span<const std::pair<Weights, double>> candidates, int m);

// Uniform average of checkpoints collected along a single fine-tuning.
Weights moving_average(std::span<const Checkpoint> ckpts);

void write_lmc_csv(const std::filesystem::path& path, std::span<const LmcRow> rows);
void write_gap_csv(const std::filesystem::path& path, const SubsetGapReport& report);

}  // namespace warm
