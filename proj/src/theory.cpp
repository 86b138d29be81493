#include "warm/theory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "warm/io.hpp"

namespace warm {

void TheoryWorld::validate() const {
    if (feature_count < 1) throw std::invalid_argument("TheoryWorld: F must be >= 1");
    if (feature_count > feature_dim) throw std::invalid_argument("TheoryWorld: requires F <= d");
    const auto f = static_cast<std::size_t>(feature_count);
    if (p.size() != f) throw std::invalid_argument("TheoryWorld: p must have F entries");
    if (z_norms.size() != f) throw std::invalid_argument("TheoryWorld: z_norms must have F entries");
    for (std::size_t j = 0; j < f; ++j) {
        if (!(p[j] >= 0.0 && p[j] <= 1.0))
            throw std::invalid_argument("TheoryWorld: probabilities must be in [0,1]");
        if (!(z_norms[j] >= 0.0)) throw std::invalid_argument("TheoryWorld: norms must be >= 0");
    }
    if (!(sigma >= 0.0)) throw std::invalid_argument("TheoryWorld: sigma must be >= 0");
}

TheoryRm sample_theory_rm(const TheoryWorld& world, const FeatureBank& bank, RngState& rng) {
    world.validate();
    const auto f = static_cast<std::size_t>(world.feature_count);
    const auto d = static_cast<std::size_t>(world.feature_dim);
    TheoryRm rm;
    rm.mask.assign(f, 0);
    rm.omega.assign(d, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        rm.mask[j] = rng.uniform() < world.p[j] ? 1 : 0;
        if (rm.mask[j]) {
            axpy(1.0, bank.feature(static_cast<int>(j)), rm.omega);
        }
    }
    return rm;
}

double selector_reward(const Vec& omega, const Vec& selector, const Vec& x, int feature_dim) {
    const auto d = static_cast<std::size_t>(feature_dim);
    const std::size_t f = selector.size();
    if (x.size() != f * d || omega.size() != d) {
        throw std::invalid_argument("selector_reward: dimension mismatch");
    }
    Vec pooled(d, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        if (selector[j] == 0.0) continue;
        axpy(selector[j], {x.data() + j * d, d}, pooled);
    }
    return dot(omega, pooled);
}

double ens_limit(const TheoryWorld& world, double y) {
    world.validate();
    if (y != 1.0 && y != -1.0) throw std::invalid_argument("ens_limit: y must be +1 or -1");
    double s = 0.0;
    for (std::size_t j = 0; j < world.p.size(); ++j) {
        s += world.p[j] * (world.z_norms[j] * world.z_norms[j]);
    }
    return y * s;
}

double wa_limit(const TheoryWorld& world, double y) {
    world.validate();
    if (y != 1.0 && y != -1.0) throw std::invalid_argument("wa_limit: y must be +1 or -1");
    double s = 0.0;
    for (std::size_t j = 0; j < world.p.size(); ++j) {
        s += (world.p[j] * world.p[j]) * (world.z_norms[j] * world.z_norms[j]);
    }
    return y * s;
}

McLimitReport mc_limit_check(const TheoryWorld& world, std::size_t members, std::size_t n_items,
                             RngState& rng, Exec exec) {
    world.validate();
    if (members < 1) throw std::invalid_argument("mc_limit_check: members must be >= 1");
    if (n_items < 1) throw std::invalid_argument("mc_limit_check: n_items must be >= 1");
    if (world.sigma > 0.05) {
        throw std::invalid_argument(
            "mc_limit_check: sigma must be <= 0.05 (small-noise assumption)");
    }
    const auto f = static_cast<std::size_t>(world.feature_count);
    const auto d = static_cast<std::size_t>(world.feature_dim);

    auto [bank_rng, draw_rng] = rng.split();
    const FeatureBank bank =
        make_feature_bank(world.feature_count, world.feature_dim, world.z_norms, bank_rng);
    auto [member_rng, item_rng] = draw_rng.split();

    // Items at y = +1; block j is y * z^j plus optional small noise.
    std::vector<Vec> items(n_items);
    for (std::size_t t = 0; t < n_items; ++t) {
        RngState ir = item_rng.substream(t);
        Vec x(f * d);
        for (std::size_t j = 0; j < f; ++j) {
            std::span<const double> zj = bank.feature(static_cast<int>(j));
            for (std::size_t k = 0; k < d; ++k) {
                x[j * d + k] = zj[k] + (world.sigma > 0.0 ? world.sigma * ir.gaussian() : 0.0);
            }
        }
        items[t] = std::move(x);
    }

    // Per-member predictions (ENS) and running mask/omega sums (WA), chunked
    // so the float reductions are order-fixed.
    const std::size_t nc = chunk_count(members);
    std::vector<Vec> mask_parts(nc), omega_parts(nc);
    Vec ens_parts(nc, 0.0);
    for_chunks(members, exec, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Vec mask_sum(f, 0.0);
        Vec omega_sum(d, 0.0);
        double ens_sum = 0.0;
        Vec selector(f, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            RngState mr = member_rng.substream(i);
            const TheoryRm rm = sample_theory_rm(world, bank, mr);
            for (std::size_t j = 0; j < f; ++j) {
                selector[j] = static_cast<double>(rm.mask[j]);
                mask_sum[j] += selector[j];
            }
            axpy(1.0, rm.omega, omega_sum);
            double member_mean = 0.0;
            for (const Vec& x : items) {
                member_mean += selector_reward(rm.omega, selector, x, world.feature_dim);
            }
            ens_sum += member_mean / static_cast<double>(n_items);
        }
        mask_parts[c] = std::move(mask_sum);
        omega_parts[c] = std::move(omega_sum);
        ens_parts[c] = ens_sum;
    });

    Vec mean_mask(f, 0.0);
    Vec mean_omega(d, 0.0);
    double ens_mc = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        axpy(1.0, mask_parts[c], mean_mask);
        axpy(1.0, omega_parts[c], mean_omega);
        ens_mc += ens_parts[c];
    }
    const double inv_m = 1.0 / static_cast<double>(members);
    ens_mc *= inv_m;
    for (auto& v : mean_mask) v *= inv_m;
    for (auto& v : mean_omega) v *= inv_m;

    double wa_mc = 0.0;
    for (const Vec& x : items) {
        wa_mc += selector_reward(mean_omega, mean_mask, x, world.feature_dim);
    }
    wa_mc /= static_cast<double>(n_items);

    McLimitReport report;
    report.members = members;
    report.items = n_items;
    report.ens_mc = ens_mc;
    report.wa_mc = wa_mc;
    report.ens_cf = ens_limit(world, 1.0);
    report.wa_cf = wa_limit(world, 1.0);
    report.abs_err_ens = std::abs(ens_mc - report.ens_cf);
    report.abs_err_wa = std::abs(wa_mc - report.wa_cf);
    report.abs_err = std::max(report.abs_err_ens, report.abs_err_wa);
    return report;
}

double mc_wa_depth_estimate(const TheoryWorld& world, int layers, std::size_t members,
                            RngState& rng) {
    world.validate();
    if (layers < 1) throw std::invalid_argument("mc_wa_depth_estimate: layers must be >= 1");
    if (members < 1) throw std::invalid_argument("mc_wa_depth_estimate: members must be >= 1");
    const auto f = static_cast<std::size_t>(world.feature_count);

    // Each layer's averaged mask tends to [p_j]; the stacked WA prediction on
    // a noiseless y=+1 item multiplies the layer means per feature.
    std::vector<Vec> layer_mean(static_cast<std::size_t>(layers), Vec(f, 0.0));
    for (std::size_t i = 0; i < members; ++i) {
        RngState mr = rng.substream(i);
        for (int l = 0; l < layers; ++l) {
            for (std::size_t j = 0; j < f; ++j) {
                layer_mean[static_cast<std::size_t>(l)][j] +=
                    mr.uniform() < world.p[j] ? 1.0 : 0.0;
            }
        }
    }
    double out = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
        double factor = 1.0;
        for (int l = 0; l < layers; ++l) {
            factor *= layer_mean[static_cast<std::size_t>(l)][j] / static_cast<double>(members);
        }
        out += factor * (world.z_norms[j] * world.z_norms[j]);
    }
    return out;
}

void write_mc_report_json(const std::filesystem::path& path, const McLimitReport& report) {
    std::string out = "{";
    out += "\"members\":" + std::to_string(report.members);
    out += ",\"items\":" + std::to_string(report.items);
    out += ",\"ens_mc\":" + format_g17(report.ens_mc);
    out += ",\"wa_mc\":" + format_g17(report.wa_mc);
    out += ",\"ens_cf\":" + format_g17(report.ens_cf);
    out += ",\"wa_cf\":" + format_g17(report.wa_cf);
    out += ",\"abs_err_ens\":" + format_g17(report.abs_err_ens);
    out += ",\"abs_err_wa\":" + format_g17(report.abs_err_wa);
    out += ",\"abs_err\":" + format_g17(report.abs_err);
    out += "}\n";
    write_text_file(path, out);
}

}  // namespace warm
