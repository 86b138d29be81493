#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace warm {

// Execution mode for the dual-path kernels. Serial is the reference
// implementation; Parallel runs the same chunk decomposition under OpenMP.
// Both accumulate floating-point partials per fixed-size chunk and combine
// them in chunk order, so results are bit-identical between the two modes
// and independent of the thread count.
enum class Exec { Serial, Parallel };

// Fixed chunk size of the deterministic reductions. Changing this changes
// rounding (and therefore frozen outputs); it is part of the numeric
// contract, not a tuning knob.
inline constexpr std::size_t kReduceChunk = 64;

inline std::size_t chunk_count(std::size_t n) {
    return (n + kReduceChunk - 1) / kReduceChunk;
}

// Runs body(chunk_index, begin, end) over [0, n) in kReduceChunk slices.
// Bodies must only write to per-chunk slots; the caller combines partials
// in chunk order afterwards.
template <typename Body>
void for_chunks(std::size_t n, Exec exec, Body&& body) {
    const std::int64_t nc = static_cast<std::int64_t>(chunk_count(n));
#ifdef _OPENMP
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t c = 0; c < nc; ++c) {
            const std::size_t begin = static_cast<std::size_t>(c) * kReduceChunk;
            const std::size_t end = begin + kReduceChunk < n ? begin + kReduceChunk : n;
            body(static_cast<std::size_t>(c), begin, end);
        }
        return;
    }
#else
    (void)exec;
#endif
    for (std::int64_t c = 0; c < nc; ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kReduceChunk;
        const std::size_t end = begin + kReduceChunk < n ? begin + kReduceChunk : n;
        body(static_cast<std::size_t>(c), begin, end);
    }
}

// Plain element-wise parallel loop for order-free work (per-index outputs,
// integer counters).
template <typename Body>
void for_indices(std::size_t n, Exec exec, Body&& body) {
    const std::int64_t ni = static_cast<std::int64_t>(n);
#ifdef _OPENMP
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < ni; ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)exec;
#endif
    for (std::int64_t i = 0; i < ni; ++i) {
        body(static_cast<std::size_t>(i));
    }
}

}  // namespace warm
