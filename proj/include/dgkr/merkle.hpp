#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dgkr/sha256.hpp"

namespace dgkr {

/// Binary Merkle tree over caller-supplied leaf digests (power-of-two leaf
/// count). Inner nodes are SHA-256 of the concatenated children.
class MerkleTree {
public:
    explicit MerkleTree(std::vector<Digest> leaves) {
        if (leaves.empty() || (leaves.size() & (leaves.size() - 1)) != 0) {
            throw std::invalid_argument("leaf count must be a nonzero power of two");
        }
        leaf_count_ = leaves.size();
        nodes_.resize(2 * leaf_count_);
        for (std::size_t i = 0; i < leaf_count_; ++i) {
            nodes_[leaf_count_ + i] = leaves[i];
        }
        for (std::size_t i = leaf_count_; i-- > 1;) {
            nodes_[i] = sha256_concat(nodes_[2 * i], nodes_[2 * i + 1]);
        }
    }

    std::size_t leaf_count() const { return leaf_count_; }
    const Digest& root() const { return nodes_.at(1); }

    /// Sibling digests from leaf to root.
    std::vector<Digest> path(std::size_t leaf_index) const {
        if (leaf_index >= leaf_count_) {
            throw std::out_of_range("leaf index out of range");
        }
        std::vector<Digest> out;
        std::size_t node = leaf_count_ + leaf_index;
        while (node > 1) {
            out.push_back(nodes_[node ^ 1]);
            node >>= 1;
        }
        return out;
    }

    static bool verify_path(const Digest& root, const Digest& leaf,
                            std::size_t leaf_index, std::span<const Digest> path) {
        Digest h = leaf;
        std::size_t index = leaf_index;
        for (const Digest& sibling : path) {
            h = (index & 1) ? sha256_concat(sibling, h) : sha256_concat(h, sibling);
            index >>= 1;
        }
        return index == 0 && h == root;
    }

private:
    std::size_t leaf_count_ = 0;
    std::vector<Digest> nodes_;
};

} // namespace dgkr
