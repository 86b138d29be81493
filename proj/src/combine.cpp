#include "warm/combine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

#include "warm/io.hpp"

namespace warm {
namespace {

void validate_members(std::span<const Weights> members, std::span<const double>& coeffs,
                      Vec& uniform_storage) {
    if (members.empty()) throw std::invalid_argument("combiner: needs at least one member");
    for (const auto& m : members) {
        if (!(m.shape == members[0].shape) || m.values.size() != members[0].values.size()) {
            throw std::invalid_argument("combiner: member layouts differ");
        }
    }
    if (coeffs.empty()) {
        uniform_storage.assign(members.size(), 1.0 / static_cast<double>(members.size()));
        coeffs = uniform_storage;
    }
    if (coeffs.size() != members.size()) {
        throw std::invalid_argument("combiner: coefficient count does not match members");
    }
    double sum = 0.0;
    for (double c : coeffs) {
        if (!(c >= 0.0)) throw std::invalid_argument("combiner: coefficients must be nonnegative");
        sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("combiner: coefficients must sum to 1 within 1e-12");
    }
}

bool same_bits(const Vec& a, const Vec& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

Weights weight_average(std::span<const Weights> members, std::span<const double> coeffs) {
    Vec uniform_storage;
    validate_members(members, coeffs, uniform_storage);

    // Drop zero-coefficient members; endpoints stay bit-exact.
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (coeffs[i] != 0.0) live.push_back(i);
    }
    if (live.empty()) throw std::invalid_argument("combiner: all coefficients are zero");
    if (live.size() == 1 && coeffs[live[0]] == 1.0) return members[live[0]];

    const bool all_identical = std::all_of(live.begin(), live.end(), [&](std::size_t i) {
        return same_bits(members[i].values, members[live[0]].values);
    });
    if (all_identical) return members[live[0]];

    // Canonical accumulation order: coefficient descending, then parameter
    // bytes; permuting (members, coeffs) together cannot change the sum.
    std::sort(live.begin(), live.end(), [&](std::size_t a, std::size_t b) {
        if (coeffs[a] != coeffs[b]) return coeffs[a] > coeffs[b];
        return std::memcmp(members[a].values.data(), members[b].values.data(),
                           members[a].values.size() * sizeof(double)) < 0;
    });

    Weights out = Weights::zeros(members[0].shape);
    for (std::size_t i : live) {
        axpy(coeffs[i], members[i].values, out.values);
    }
    return out;
}

double ensemble_reward(std::span<const Weights> members, std::span<const double> coeffs,
                       const Item& item) {
    Vec uniform_storage;
    validate_members(members, coeffs, uniform_storage);

    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (coeffs[i] != 0.0) live.push_back(i);
    }
    if (live.empty()) throw std::invalid_argument("combiner: all coefficients are zero");
    if (live.size() == 1 && coeffs[live[0]] == 1.0) return forward(members[live[0]], item);

    Vec rewards(live.size());
    for (std::size_t k = 0; k < live.size(); ++k) rewards[k] = forward(members[live[k]], item);
    if (std::all_of(rewards.begin(), rewards.end(),
                    [&](double r) { return r == rewards[0]; })) {
        return rewards[0];
    }
    double out = 0.0;
    for (std::size_t k = 0; k < live.size(); ++k) out += coeffs[live[k]] * rewards[k];
    return out;
}

double pairwise_accuracy(const RewardFn& reward, std::span<const PreferencePair> data,
                         Exec exec) {
    if (data.empty()) throw std::invalid_argument("pairwise_accuracy: data must be nonempty");
    std::vector<std::size_t> counts(chunk_count(data.size()), 0);
    for_chunks(data.size(), exec, [&](std::size_t c, std::size_t begin, std::size_t end) {
        std::size_t correct = 0;
        for (std::size_t k = begin; k < end; ++k) {
            if (reward(data[k].labeled_preferred()) >= reward(data[k].labeled_rejected())) {
                ++correct;
            }
        }
        counts[c] = correct;
    });
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    return static_cast<double>(total) / static_cast<double>(data.size());
}

double pairwise_accuracy(const Weights& w, std::span<const PreferencePair> data, Exec exec) {
    return pairwise_accuracy([&](const Item& item) { return forward(w, item); }, data, exec);
}

std::vector<double> default_lambda_grid(int points) {
    if (points < 2) throw std::invalid_argument("default_lambda_grid: needs >= 2 points");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
    }
    return grid;
}

std::vector<LmcRow> lmc_curve(const Weights& w1, const Weights& w2,
                              std::span<const PreferencePair> data,
                              std::span<const double> lambda_grid) {
    if (data.empty()) throw std::invalid_argument("lmc_curve: data must be nonempty");
    for (double l : lambda_grid) {
        if (!(l >= 0.0 && l <= 1.0)) {
            throw std::invalid_argument("lmc_curve: lambda grid must lie in [0,1]");
        }
    }
    const std::size_t n = data.size();
    // Member rewards are reused for every lambda.
    Vec r1p(n), r1m(n), r2p(n), r2m(n);
    for_indices(n, Exec::Parallel, [&](std::size_t k) {
        r1p[k] = forward(w1, data[k].labeled_preferred());
        r1m[k] = forward(w1, data[k].labeled_rejected());
        r2p[k] = forward(w2, data[k].labeled_preferred());
        r2m[k] = forward(w2, data[k].labeled_rejected());
    });
    std::size_t c1 = 0, c2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        c1 += r1p[k] >= r1m[k];
        c2 += r2p[k] >= r2m[k];
    }
    const double acc1 = static_cast<double>(c1) / static_cast<double>(n);
    const double acc2 = static_cast<double>(c2) / static_cast<double>(n);

    std::vector<LmcRow> rows;
    rows.reserve(lambda_grid.size());
    const Weights members[2] = {w1, w2};
    for (double lambda : lambda_grid) {
        const double coeffs[2] = {1.0 - lambda, lambda};
        const Weights wa = weight_average(members, coeffs);
        LmcRow row;
        row.lambda = lambda;
        row.acc_wa = pairwise_accuracy(wa, data);
        std::vector<std::size_t> counts(chunk_count(n), 0);
        for_chunks(n, Exec::Parallel, [&](std::size_t c, std::size_t begin, std::size_t end) {
            std::size_t correct = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const double ep = coeffs[0] * r1p[k] + coeffs[1] * r2p[k];
                const double em = coeffs[0] * r1m[k] + coeffs[1] * r2m[k];
                correct += ep >= em;
            }
            counts[c] = correct;
        });
        row.acc_ens = static_cast<double>(
                          std::accumulate(counts.begin(), counts.end(), std::size_t{0})) /
                      static_cast<double>(n);
        row.acc_diag = coeffs[0] * acc1 + coeffs[1] * acc2;
        rows.push_back(row);
    }
    return rows;
}

SubsetGapReport subset_gap_report(std::span<const std::pair<Weights, Weights>> rm_pairs,
                                  std::span<const PreferencePair> data) {
    if (rm_pairs.empty()) throw std::invalid_argument("subset_gap_report: needs >= 1 RM pair");
    std::map<SubsetTag, std::vector<PreferencePair>> by_subset;
    for (const auto& pair : data) by_subset[pair.subset].push_back(pair);
    for (SubsetTag tag : {SubsetTag::TrainClean, SubsetTag::TrainCorrupt, SubsetTag::IdVal,
                          SubsetTag::OodTest}) {
        if (!by_subset.count(tag) || by_subset[tag].empty()) {
            throw std::invalid_argument("subset_gap_report: missing subset " + to_string(tag));
        }
    }

    SubsetGapReport report;
    std::map<SubsetTag, double> sums;
    const double half[2] = {0.5, 0.5};
    for (std::size_t p = 0; p < rm_pairs.size(); ++p) {
        const Weights members[2] = {rm_pairs[p].first, rm_pairs[p].second};
        const Weights wa = weight_average(members, half);
        for (const auto& [tag, subset_data] : by_subset) {
            const double acc_wa = pairwise_accuracy(wa, subset_data);
            const double acc_ens = pairwise_accuracy(
                [&](const Item& item) { return ensemble_reward(members, half, item); },
                subset_data);
            const double gap = acc_wa - acc_ens;
            report.rows.push_back({static_cast<int>(p), tag, gap});
            sums[tag] += gap;
        }
    }
    for (auto& [tag, sum] : sums) {
        report.mean_gap[tag] = sum / static_cast<double>(rm_pairs.size());
    }
    return report;
}

Weights select_top_m(std::span<const std::pair<Weights, double>> candidates, int m) {
    if (m < 1 || static_cast<std::size_t>(m) > candidates.size()) {
        throw std::invalid_argument("select_top_m: M must be in [1, |candidates|]");
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].second > candidates[b].second;
    });
    std::vector<Weights> top;
    top.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) top.push_back(candidates[order[static_cast<std::size_t>(i)]].first);
    return weight_average(top);
}

Weights moving_average(std::span<const Checkpoint> ckpts) {
    if (ckpts.size() < 2) throw std::invalid_argument("moving_average: needs >= 2 checkpoints");
    for (const auto& c : ckpts) {
        if (c.trajectory_id != ckpts[0].trajectory_id) {
            throw std::invalid_argument("moving_average: checkpoints from mixed trajectories");
        }
    }
    std::vector<Weights> members;
    members.reserve(ckpts.size());
    for (const auto& c : ckpts) members.push_back(c.weights);
    return weight_average(members);
}

void write_lmc_csv(const std::filesystem::path& path, std::span<const LmcRow> rows) {
    CsvTable table;
    table.header = {"lambda", "acc_wa", "acc_ens", "acc_diag"};
    for (const auto& row : rows) {
        table.rows.push_back({format_g17(row.lambda), format_g17(row.acc_wa),
                              format_g17(row.acc_ens), format_g17(row.acc_diag)});
    }
    table.write(path);
}

void write_gap_csv(const std::filesystem::path& path, const SubsetGapReport& report) {
    CsvTable table;
    table.header = {"pair_id", "subset", "gap"};
    for (const auto& row : report.rows) {
        table.rows.push_back({std::to_string(row.pair_id), to_string(row.subset),
                              format_g17(row.gap)});
    }
    for (const auto& [tag, gap] : report.mean_gap) {
        table.rows.push_back({"mean", to_string(tag), format_g17(gap)});
    }
    table.write(path);
}

}  // namespace warm
