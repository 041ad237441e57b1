#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgkr/counters.hpp"
#include "dgkr/field.hpp"

namespace dgkr::distinct {

/// Single-element hash: three rounds of r <- (r + e + 4294967295)^3 from
/// r = 0. The offset constant is 2^32 - 1.
inline FieldElement f_hash(const FieldElement& e) {
    const FieldConfigPtr& cfg = e.config();
    const FieldElement offset = FieldElement::from_u64(cfg, 4294967295ull);
    FieldElement r = FieldElement::zero(cfg);
    for (int i = 0; i < 3; ++i) {
        const FieldElement t = r + e + offset;
        r = t * t * t;
    }
    return r;
}

using HashFn = std::function<FieldElement(const FieldElement&)>;

/// Validator indexes with their admissible bound (0 <= e <= bound).
struct IndexList {
    FieldConfigPtr cfg;
    std::vector<FieldElement> items;
    std::uint64_t bound = 0;
};

/// Associative array hash: AH(list) = sum_i F(e_i); the empty list hashes
/// to zero. Permutation-invariant by construction.
inline FieldElement ah(std::span<const FieldElement> list, const FieldConfigPtr& cfg) {
    FieldElement acc = FieldElement::zero(cfg);
    for (const auto& e : list) {
        acc += f_hash(e);
    }
    return acc;
}

inline FieldElement ah(const IndexList& list) {
    return ah(std::span<const FieldElement>(list.items), list.cfg);
}

/*
 * Verifies that all elements of A are pairwise different, given a claimed
 * ascending sort A*: the associative hashes must match and A* must strictly
 * ascend in the integer order of canonical representatives. O(n)
 * comparisons (counter-asserted by tests).
 */
inline bool pairwise_distinct_check(std::span<const FieldElement> a,
                                    std::span<const FieldElement> a_sorted,
                                    const FieldConfigPtr& cfg) {
    ops::counters().comparisons += 1;
    if (ah(a, cfg) != ah(a_sorted, cfg)) {
        return false;
    }
    for (std::size_t i = 1; i < a_sorted.size(); ++i) {
        ops::counters().comparisons += 1;
        if (a_sorted[i] <= a_sorted[i - 1]) {
            return false;
        }
    }
    return true;
}

/// Running associative hash over all indexes of processed blocks.
struct ChainState {
    FieldElement h;
    std::uint64_t n_max = 0;

    static ChainState fresh(const FieldConfigPtr& cfg, std::uint64_t n_max) {
        return ChainState{FieldElement::zero(cfg), n_max};
    }
};

/// H' = H + AH(block); associativity makes the result order-independent
/// across blocks. Every index must satisfy 0 <= e <= n_max.
inline ChainState chain_update(const ChainState& state, const IndexList& block) {
    const FieldElement bound = FieldElement::from_u64(block.cfg, state.n_max);
    for (const auto& e : block.items) {
        if (!(e <= bound)) {
            throw std::out_of_range("validator index above bound");
        }
    }
    return ChainState{state.h + ah(block), state.n_max};
}

struct BitChangeResult {
    std::vector<double> probabilities; // one per little-endian bit index
    std::size_t samples = 0;

    /// One row per bit position, matching the experiment's plot input.
    std::string to_csv() const {
        std::ostringstream os;
        os << "index,bit_change\n";
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            os << i << ',' << probabilities[i] << '\n';
        }
        return os.str();
    }
};

/*
 * Avalanche experiment: for x in 1..count, record the little-endian bits of
 * the canonical difference F(x+1) - F(x) and report the per-bit set
 * probability. A well-mixing F keeps every position near 1/2, with the top
 * bits skewed by the modulus.
 */
inline BitChangeResult bitchange_experiment(std::size_t count,
                                            const FieldConfigPtr& cfg,
                                            const HashFn& hash = {}) {
    if (count < 10000) {
        throw std::invalid_argument("bit-change experiment needs count >= 10^4");
    }
    const HashFn& h = hash ? hash : HashFn(&f_hash);
    const std::size_t bits = cfg->bits();
    std::vector<std::uint64_t> set_counts(bits, 0);
    FieldElement prev = h(FieldElement::from_u64(cfg, 1));
    for (std::size_t x = 1; x <= count; ++x) {
        FieldElement next = h(FieldElement::from_u64(cfg, x + 1));
        const FieldElement d = next - prev;
        prev = next;
        const BigInt& v = d.value();
        for (std::size_t k = 0; k < bits; ++k) {
            if (boost::multiprecision::bit_test(v, static_cast<unsigned>(k))) {
                ++set_counts[k];
            }
        }
    }
    BitChangeResult res;
    res.samples = count;
    res.probabilities.reserve(bits);
    for (std::size_t k = 0; k < bits; ++k) {
        res.probabilities.push_back(static_cast<double>(set_counts[k]) /
                                    static_cast<double>(count));
    }
    return res;
}

} // namespace dgkr::distinct
