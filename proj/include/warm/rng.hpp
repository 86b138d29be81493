#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace warm {

// Counter-based splittable RNG. A state is the triple (seed, stream, counter):
// each draw hashes (seed, stream, counter) through a SplitMix64-style
// finalizer and advances the counter, so identical (seed, stream) always
// replay the same sequence. Streams are organized as a binary tree:
// split() hands out the two children of the current node, which guarantees
// distinct stream ids without coordination. substream(i) derives a keyed
// stream for indexed fan-out (one stream per data point, per member, ...),
// which is what makes parallel loops reproducible regardless of schedule.
//
// Contract: after split() the parent state must not be drawn from again.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;

    static RngState from_seed(std::uint64_t seed, std::uint64_t stream = 0) {
        return RngState{seed, stream, 0};
    }

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double gaussian();

    // Children are the two tree successors of this stream.
    std::pair<RngState, RngState> split() const {
        return {RngState{seed, 2 * stream + 1, 0}, RngState{seed, 2 * stream + 2, 0}};
    }

    // Keyed substream for indexed parallel work.
    RngState substream(std::uint64_t index) const;
};

// mean + sigma * z with z ~ N(0, I). sigma must be >= 0.
std::vector<double> gaussian_vec(RngState& rng, const std::vector<double>& mean, double sigma);

}  // namespace warm
