#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "dgkr/field.hpp"
#include "dgkr/sha256.hpp"

namespace dgkr::beacon {

/// Synthetic validator record. Inactive slots hold the all-zero record.
struct ValidatorRecord {
    std::uint64_t index = 0;
    std::array<std::uint8_t, 48> pubkey{};
    bool active = false;

    /// Fixed 64-byte leaf encoding: pubkey | index (LE64) | active flag,
    /// zero padded. The all-zero record encodes to 64 zero bytes.
    std::array<std::uint8_t, 64> encode() const {
        std::array<std::uint8_t, 64> out{};
        std::copy(pubkey.begin(), pubkey.end(), out.begin());
        for (int i = 0; i < 8; ++i) {
            out[48 + static_cast<std::size_t>(i)] =
                static_cast<std::uint8_t>(index >> (8 * i));
        }
        out[56] = active ? 1 : 0;
        return out;
    }

    Digest leaf_digest() const {
        auto enc = encode();
        return sha256(std::span<const std::uint8_t>(enc.data(), enc.size()));
    }
};

/// Deterministic synthetic validator set with unique pseudo-random pubkeys,
/// dense indexes 0..n-1, all active.
inline std::vector<ValidatorRecord> gen_validators(std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("validator count must be positive");
    }
    std::mt19937_64 rng(seed);
    std::set<std::array<std::uint8_t, 48>> seen;
    std::vector<ValidatorRecord> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        ValidatorRecord r;
        r.index = i;
        r.active = true;
        do {
            for (auto& b : r.pubkey) b = static_cast<std::uint8_t>(rng() & 0xff);
        } while (!seen.insert(r.pubkey).second);
        out.push_back(r);
    }
    return out;
}

/// z_0 = H(zero leaf), z_k = H(z_{k-1} | z_{k-1}); memoized per depth so
/// tree builds only pay for the active subtree.
inline const std::vector<Digest>& zero_cache(std::size_t depth) {
    static std::mutex mu;
    static std::map<std::size_t, std::vector<Digest>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(depth);
    if (it != cache.end()) return it->second;
    std::vector<Digest> z;
    z.reserve(depth + 1);
    ValidatorRecord empty{};
    z.push_back(empty.leaf_digest());
    for (std::size_t k = 1; k <= depth; ++k) {
        z.push_back(sha256_concat(z.back(), z.back()));
    }
    return cache.emplace(depth, std::move(z)).first->second;
}

/// Membership proof: siblings cover only the active subtree (length a); the
/// d-a upper levels are implied zero-cache digests.
struct MembershipPath {
    Digest leaf{};
    std::vector<Digest> siblings;
    std::uint64_t index = 0;
    std::size_t depth = 0;
    std::size_t active_log2 = 0;
};

/*
 * SSZ-style Merkle tree of depth d over validator leaves, left-aligned
 * active region. Only the active subtree (capacity 2^a, smallest power of
 * two >= n_active) is hashed; everything to the right reuses the zero
 * cache, so a build costs at most 2*2^a + d digests.
 */
class BeaconTree {
public:
    explicit BeaconTree(std::span<const ValidatorRecord> validators,
                        std::size_t depth = 50)
        : depth_(depth), n_active_(validators.size()) {
        active_log2_ = 0;
        while ((std::size_t{1} << active_log2_) < n_active_) ++active_log2_;
        if (active_log2_ > depth_) {
            throw std::invalid_argument("validator set exceeds tree capacity");
        }
        const auto& zc = zero_cache(depth_);
        // Active subtree, level by level.
        levels_.resize(active_log2_ + 1);
        auto& leaves = levels_[0];
        leaves.reserve(std::size_t{1} << active_log2_);
        for (const auto& v : validators) {
            leaves.push_back(v.leaf_digest());
        }
        leaves.resize(std::size_t{1} << active_log2_, zc[0]);
        for (std::size_t k = 1; k <= active_log2_; ++k) {
            const auto& below = levels_[k - 1];
            auto& level = levels_[k];
            level.reserve(below.size() / 2);
            for (std::size_t i = 0; i < below.size(); i += 2) {
                level.push_back(sha256_concat(below[i], below[i + 1]));
            }
        }
        // Left spine up to the root; the sibling is always an empty subtree.
        root_ = levels_[active_log2_].front();
        for (std::size_t k = active_log2_; k < depth_; ++k) {
            root_ = sha256_concat(root_, zc[k]);
        }
    }

    std::size_t depth() const { return depth_; }
    std::size_t active_log2() const { return active_log2_; }
    std::size_t n_active() const { return n_active_; }
    const Digest& root() const { return root_; }

    MembershipPath prove_membership(std::uint64_t index) const {
        if (index >= n_active_) {
            throw std::out_of_range("inactive validator index");
        }
        MembershipPath p;
        p.index = index;
        p.depth = depth_;
        p.active_log2 = active_log2_;
        p.leaf = levels_[0][index];
        std::size_t node = index;
        for (std::size_t k = 0; k < active_log2_; ++k) {
            p.siblings.push_back(levels_[k][node ^ 1]);
            node >>= 1;
        }
        return p;
    }

    /// Recomputes the root from the record: a sibling steps through the
    /// active subtree, then d-a cached zero-subtree digests.
    static bool verify_membership(const Digest& root, const ValidatorRecord& record,
                                  const MembershipPath& path) {
        if (path.siblings.size() != path.active_log2) return false;
        if (record.leaf_digest() != path.leaf) return false;
        if (path.active_log2 < 64 && (path.index >> path.active_log2) != 0) {
            return false; // active region is left-aligned
        }
        Digest h = path.leaf;
        std::uint64_t node = path.index;
        for (std::size_t k = 0; k < path.active_log2; ++k) {
            const Digest& sib = path.siblings[k];
            h = (node & 1) ? sha256_concat(sib, h) : sha256_concat(h, sib);
            node >>= 1;
        }
        const auto& zc = zero_cache(path.depth);
        for (std::size_t k = path.active_log2; k < path.depth; ++k) {
            h = sha256_concat(h, zc[k]);
        }
        return h == root;
    }

private:
    std::size_t depth_;
    std::size_t n_active_;
    std::size_t active_log2_ = 0;
    std::vector<std::vector<Digest>> levels_;
    Digest root_{};
};

/// Abelian-group stand-in for key aggregation: a key maps to the field
/// element of its pubkey digest, and aggregation is field addition.
inline FieldElement key_scalar(const ValidatorRecord& record,
                               const FieldConfigPtr& cfg) {
    const Digest d = sha256(std::span<const std::uint8_t>(record.pubkey.data(),
                                                          record.pubkey.size()));
    BigInt v = 0;
    boost::multiprecision::import_bits(v, d.begin(), d.end(), 8, false);
    return FieldElement(cfg, std::move(v));
}

/// Running aggregates over keys sorted by validator index:
/// agg_k = agg_{k-1} + key_k. Unsorted input is rejected.
inline std::vector<FieldElement> aggregate_chain(
    std::span<const ValidatorRecord> sorted_records, const FieldConfigPtr& cfg) {
    if (sorted_records.empty()) {
        throw std::invalid_argument("aggregation needs at least one key");
    }
    for (std::size_t i = 1; i < sorted_records.size(); ++i) {
        if (sorted_records[i].index <= sorted_records[i - 1].index) {
            throw std::invalid_argument("keys must be sorted by validator index");
        }
    }
    std::vector<FieldElement> out;
    out.reserve(sorted_records.size());
    FieldElement acc = key_scalar(sorted_records.front(), cfg);
    out.push_back(acc);
    for (std::size_t i = 1; i < sorted_records.size(); ++i) {
        acc += key_scalar(sorted_records[i], cfg);
        out.push_back(acc);
    }
    return out;
}

/// Every step's input must equal the prior step's output and the final
/// aggregate must equal the unordered fold of all keys.
inline bool check_chain_links(std::span<const FieldElement> keys,
                              std::span<const FieldElement> outputs) {
    if (keys.empty() || keys.size() != outputs.size()) return false;
    if (outputs.front() != keys.front()) return false;
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (outputs[i] != outputs[i - 1] + keys[i]) return false;
    }
    FieldElement fold = FieldElement::zero(keys.front().config());
    for (std::size_t i = keys.size(); i-- > 0;) {
        fold += keys[i];
    }
    return fold == outputs.back();
}

/// Loader for validator sets from structured text:
/// [{"index": 0, "pubkey": "<96 hex chars>", "active": true}, ...].
inline std::vector<ValidatorRecord> load_validators(const nlohmann::json& j) {
    std::vector<ValidatorRecord> out;
    for (const auto& jr : j) {
        ValidatorRecord r;
        r.index = jr.at("index").get<std::uint64_t>();
        r.active = jr.at("active").get<bool>();
        const std::string hex = jr.at("pubkey").get<std::string>();
        if (hex.size() != 96) {
            throw std::invalid_argument("pubkey must be 48 bytes of hex");
        }
        auto nibble = [](char c) -> std::uint8_t {
            if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
            throw std::invalid_argument("invalid hex digit in pubkey");
        };
        for (std::size_t i = 0; i < 48; ++i) {
            r.pubkey[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) |
                                                    nibble(hex[2 * i + 1]));
        }
        out.push_back(r);
    }
    return out;
}

} // namespace dgkr::beacon
