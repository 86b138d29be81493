#include "warm/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace warm {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer: bijective, passes the usual statistical batteries
// when driven by a counter.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed + kGolden) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace

std::uint64_t RngState::next_u64() {
    ++counter;
    return mix64(stream_key(seed, stream) + counter * kGolden);
}

double RngState::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
    return lo + uniform() * (hi - lo);
}

double RngState::gaussian() {
    // (0,1] for the log argument, [0,1) for the angle.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngState RngState::substream(std::uint64_t index) const {
    return RngState{seed, mix64(stream_key(seed, stream) ^ (index + 1) * kGolden), 0};
}

std::vector<double> gaussian_vec(RngState& rng, const std::vector<double>& mean, double sigma) {
    if (sigma < 0.0) {
        throw std::invalid_argument("gaussian_vec: sigma must be >= 0");
    }
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        out[i] = mean[i] + sigma * rng.gaussian();
    }
    return out;
}

}  // namespace warm
