#pragma once

#include <cstdint>

namespace dgkr::ops {

/// Thread-local operation counters. Tests use these to pin down asymptotic
/// behaviour (linear-time provers, hash budgets, scan lengths) without
/// profiling machinery.
struct Counters {
    std::uint64_t table_touches = 0;  // bookkeeping-table element accesses
    std::uint64_t dense_evals = 0;    // dense multilinear evaluations
    std::uint64_t hash_calls = 0;     // SHA-256 digests computed
    std::uint64_t comparisons = 0;    // distinct-check scan comparisons

    void reset() { *this = Counters{}; }
};

inline Counters& counters() {
    thread_local Counters c;
    return c;
}

} // namespace dgkr::ops
