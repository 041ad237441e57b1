#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/miller_rabin.hpp>

namespace dgkr {

using BigInt = boost::multiprecision::cpp_int;

class FieldConfig;
using FieldConfigPtr = std::shared_ptr<const FieldConfig>;

/// A prime field chosen at construction time. Every protocol value lives in
/// exactly one FieldConfig; elements from different configs never mix.
class FieldConfig : public std::enable_shared_from_this<FieldConfig> {
public:
    /// Standard factory: primality is checked probabilistically and the
    /// modulus must exceed 2^16.
    static FieldConfigPtr make(BigInt modulus, std::string name) {
        if (modulus <= 0x10000) {
            throw std::invalid_argument("field modulus must exceed 2^16");
        }
        return make_small_prime(std::move(modulus), std::move(name));
    }

    /// Escape hatch for hand-checkable test primes (e.g. 97). Primality is
    /// still enforced; only the size floor is waived.
    static FieldConfigPtr make_small_prime(BigInt modulus, std::string name) {
        if (modulus < 2 || !boost::multiprecision::miller_rabin_test(modulus, 32)) {
            throw std::invalid_argument("field modulus must be prime");
        }
        return FieldConfigPtr(new FieldConfig(std::move(modulus), std::move(name)));
    }

    /// BN254 scalar field.
    static const FieldConfigPtr& bn254() {
        static const FieldConfigPtr cfg = make(
            BigInt("21888242871839275222246405745257275088548364400416034343698204186575808495617"),
            "bn254");
        return cfg;
    }

    /// Goldilocks field, 2^64 - 2^32 + 1.
    static const FieldConfigPtr& goldilocks() {
        static const FieldConfigPtr cfg =
            make(BigInt("18446744069414584321"), "goldilocks");
        return cfg;
    }

    static FieldConfigPtr by_name(const std::string& name) {
        if (name == "bn254") return bn254();
        if (name == "goldilocks") return goldilocks();
        throw std::invalid_argument("unknown field name: " + name);
    }

    const BigInt& modulus() const { return modulus_; }
    const std::string& name() const { return name_; }
    std::size_t bits() const { return bits_; }
    std::size_t byte_width() const { return byte_width_; }

private:
    FieldConfig(BigInt modulus, std::string name)
        : modulus_(std::move(modulus)), name_(std::move(name)) {
        bits_ = boost::multiprecision::msb(modulus_) + 1;
        byte_width_ = (bits_ + 7) / 8;
    }

    BigInt modulus_;
    std::string name_;
    std::size_t bits_ = 0;
    std::size_t byte_width_ = 0;
};

/// An element of a prime field, always stored fully reduced.
class FieldElement {
public:
    FieldElement() = default;

    FieldElement(FieldConfigPtr cfg, BigInt value) : cfg_(std::move(cfg)) {
        value_ = std::move(value) % cfg_->modulus();
        if (value_ < 0) value_ += cfg_->modulus();
    }

    static FieldElement zero(const FieldConfigPtr& cfg) {
        return FieldElement(cfg, 0);
    }
    static FieldElement one(const FieldConfigPtr& cfg) {
        return FieldElement(cfg, 1);
    }
    static FieldElement from_u64(const FieldConfigPtr& cfg, std::uint64_t v) {
        return FieldElement(cfg, BigInt(v));
    }

    const BigInt& value() const { return value_; }
    const FieldConfigPtr& config() const { return cfg_; }
    bool is_zero() const { return value_ == 0; }

    FieldElement operator+(const FieldElement& other) const {
        require_same_config(other);
        BigInt r = value_ + other.value_;
        if (r >= cfg_->modulus()) r -= cfg_->modulus();
        return reduced(cfg_, std::move(r));
    }

    FieldElement operator-(const FieldElement& other) const {
        require_same_config(other);
        BigInt r = value_ - other.value_;
        if (r < 0) r += cfg_->modulus();
        return reduced(cfg_, std::move(r));
    }

    FieldElement operator*(const FieldElement& other) const {
        require_same_config(other);
        return reduced(cfg_, (value_ * other.value_) % cfg_->modulus());
    }

    FieldElement operator-() const {
        if (value_ == 0) return *this;
        return reduced(cfg_, cfg_->modulus() - value_);
    }

    FieldElement& operator+=(const FieldElement& o) { return *this = *this + o; }
    FieldElement& operator-=(const FieldElement& o) { return *this = *this - o; }
    FieldElement& operator*=(const FieldElement& o) { return *this = *this * o; }

    /// Multiplicative inverse via Fermat; the zero element has none.
    FieldElement inv() const {
        if (value_ == 0) {
            throw std::domain_error("inverse of zero field element");
        }
        return reduced(cfg_, boost::multiprecision::powm(
                                 value_, cfg_->modulus() - 2, cfg_->modulus()));
    }

    bool operator==(const FieldElement& other) const {
        return same_config(other) && value_ == other.value_;
    }
    bool operator!=(const FieldElement& other) const { return !(*this == other); }

    /// Integer order of canonical representatives.
    bool operator<(const FieldElement& other) const {
        require_same_config(other);
        return value_ < other.value_;
    }
    bool operator<=(const FieldElement& other) const {
        require_same_config(other);
        return value_ <= other.value_;
    }

    /// Canonical encoding: little-endian, fixed width ceil(bits(p)/8).
    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out;
        out.reserve(cfg_->byte_width());
        boost::multiprecision::export_bits(value_, std::back_inserter(out), 8,
                                           /*msv_first=*/false);
        if (value_ == 0) out.clear(); // export_bits emits one 0 byte for zero
        out.resize(cfg_->byte_width(), 0);
        return out;
    }

    void append_bytes(std::vector<std::uint8_t>& sink) const {
        auto b = to_bytes();
        sink.insert(sink.end(), b.begin(), b.end());
    }

    /// Rejects non-canonical input: wrong width or value >= p.
    static FieldElement from_bytes(std::span<const std::uint8_t> bytes,
                                   const FieldConfigPtr& cfg) {
        if (bytes.size() != cfg->byte_width()) {
            throw std::invalid_argument("field element encoding has wrong length");
        }
        BigInt v = 0;
        boost::multiprecision::import_bits(v, bytes.begin(), bytes.end(), 8,
                                           /*msv_first=*/false);
        if (v >= cfg->modulus()) {
            throw std::invalid_argument("non-canonical field element encoding");
        }
        return reduced(cfg, std::move(v));
    }

    bool same_config(const FieldElement& other) const {
        if (cfg_ == other.cfg_) return true;
        return cfg_ && other.cfg_ && cfg_->modulus() == other.cfg_->modulus();
    }

private:
    static FieldElement reduced(const FieldConfigPtr& cfg, BigInt v) {
        FieldElement e;
        e.cfg_ = cfg;
        e.value_ = std::move(v);
        return e;
    }

    void require_same_config(const FieldElement& other) const {
        if (!same_config(other)) {
            throw std::invalid_argument("field config mismatch");
        }
    }

    FieldConfigPtr cfg_;
    BigInt value_ = 0;
};

enum class ArithKind { add, sub, mul };

inline FieldElement arith(const FieldElement& a, const FieldElement& b,
                          ArithKind kind) {
    switch (kind) {
        case ArithKind::add: return a + b;
        case ArithKind::sub: return a - b;
        case ArithKind::mul: return a * b;
    }
    throw std::invalid_argument("unknown arithmetic kind");
}

/// Uniform random element via rejection sampling from the generator's bytes.
template <typename Rng>
FieldElement random_element(const FieldConfigPtr& cfg, Rng& rng) {
    const std::size_t width = cfg->byte_width();
    const unsigned top_bits = static_cast<unsigned>(cfg->bits() - 8 * (width - 1));
    const std::uint8_t mask =
        top_bits >= 8 ? 0xff : static_cast<std::uint8_t>((1u << top_bits) - 1);
    std::vector<std::uint8_t> buf(width);
    for (;;) {
        for (auto& b : buf) b = static_cast<std::uint8_t>(rng() & 0xff);
        buf.back() &= mask;
        BigInt v = 0;
        boost::multiprecision::import_bits(v, buf.begin(), buf.end(), 8, false);
        if (v < cfg->modulus()) return FieldElement(cfg, std::move(v));
    }
}

} // namespace dgkr
