#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dgkr/field.hpp"
#include "dgkr/sha256.hpp"

namespace dgkr {

/// Fiat-Shamir transcript over a running SHA-256 state. Challenges are a
/// pure function of the domain-separation label, the field, all previously
/// absorbed bytes and the number of prior draws.
class Transcript {
public:
    Transcript(std::string_view label, FieldConfigPtr cfg)
        : cfg_(std::move(cfg)) {
        Sha256 h;
        h.update(std::string_view("dgkr.transcript.v1"));
        h.update(label);
        FieldElement::zero(cfg_); // touch to validate cfg non-null early
        auto mod_bytes = encode_modulus();
        h.update(std::span<const std::uint8_t>(mod_bytes.data(), mod_bytes.size()));
        state_ = h.finalize();
    }

    const FieldConfigPtr& config() const { return cfg_; }

    void absorb(std::span<const std::uint8_t> data) {
        Sha256 h;
        h.update(std::span<const std::uint8_t>(state_.data(), state_.size()));
        h.update(data);
        state_ = h.finalize();
    }

    void absorb(const FieldElement& e) {
        auto b = e.to_bytes();
        absorb(std::span<const std::uint8_t>(b.data(), b.size()));
    }

    void absorb_u64(std::uint64_t v) {
        std::array<std::uint8_t, 8> b{};
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        absorb(std::span<const std::uint8_t>(b.data(), b.size()));
    }

    /// Hash-to-field by rejection sampling on 32-byte blocks, with the top
    /// byte masked to the field's bit width to keep the rejection rate low.
    FieldElement challenge() {
        const std::size_t width = cfg_->byte_width();
        const unsigned top_bits =
            static_cast<unsigned>(cfg_->bits() - 8 * (width - 1));
        const std::uint8_t mask =
            top_bits >= 8 ? 0xff : static_cast<std::uint8_t>((1u << top_bits) - 1);
        const std::uint64_t draw = draws_++;
        for (std::uint64_t ctr = 0;; ++ctr) {
            std::vector<std::uint8_t> buf = squeeze_blocks("chal", draw, ctr, width);
            buf.back() &= mask;
            BigInt v = 0;
            boost::multiprecision::import_bits(v, buf.begin(), buf.end(), 8, false);
            if (v < cfg_->modulus()) {
                return FieldElement(cfg_, std::move(v));
            }
        }
    }

    /// Uniform index in [0, bound) by rejection on 64-bit draws.
    std::uint64_t challenge_index(std::uint64_t bound) {
        if (bound == 0) {
            throw std::invalid_argument("challenge_index bound must be positive");
        }
        const std::uint64_t draw = draws_++;
        const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
        for (std::uint64_t ctr = 0;; ++ctr) {
            std::vector<std::uint8_t> buf = squeeze_blocks("idx", draw, ctr, 8);
            std::uint64_t v = 0;
            for (int i = 7; i >= 0; --i) v = (v << 8) | buf[static_cast<std::size_t>(i)];
            if (v < limit) return v % bound;
        }
    }

    /// Snapshot of the running state; equal transcripts have absorbed equal
    /// byte sequences (used by replay/equality tests).
    Digest state() const { return state_; }

private:
    std::vector<std::uint8_t> encode_modulus() const {
        std::vector<std::uint8_t> out;
        boost::multiprecision::export_bits(cfg_->modulus(), std::back_inserter(out),
                                           8, false);
        return out;
    }

    std::vector<std::uint8_t> squeeze_blocks(std::string_view tag,
                                             std::uint64_t draw,
                                             std::uint64_t ctr,
                                             std::size_t n_bytes) const {
        std::vector<std::uint8_t> out;
        out.reserve(n_bytes);
        for (std::uint64_t block = 0; out.size() < n_bytes; ++block) {
            Sha256 h;
            h.update(std::span<const std::uint8_t>(state_.data(), state_.size()));
            h.update(tag);
            std::array<std::uint8_t, 24> suffix{};
            auto put64 = [&](int off, std::uint64_t v) {
                for (int i = 0; i < 8; ++i) {
                    suffix[static_cast<std::size_t>(off + i)] =
                        static_cast<std::uint8_t>(v >> (8 * i));
                }
            };
            put64(0, draw);
            put64(8, ctr);
            put64(16, block);
            h.update(std::span<const std::uint8_t>(suffix.data(), suffix.size()));
            Digest d = h.finalize();
            for (std::uint8_t b : d) {
                if (out.size() == n_bytes) break;
                out.push_back(b);
            }
        }
        return out;
    }

    FieldConfigPtr cfg_;
    Digest state_{};
    std::uint64_t draws_ = 0;
};

} // namespace dgkr
