#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>
#include <vector>

#include "dgkr/field.hpp"
#include "oracles.hpp"

using dgkr::ArithKind;
using dgkr::BigInt;
using dgkr::FieldConfig;
using dgkr::FieldElement;

TEST_CASE("built-in configs") {
    auto bn = FieldConfig::bn254();
    CHECK(bn->bits() == 254);
    CHECK(bn->byte_width() == 32);
    auto gl = FieldConfig::goldilocks();
    CHECK(gl->modulus() == BigInt("18446744069414584321"));
    CHECK(gl->byte_width() == 8);
    CHECK_THROWS_AS(FieldConfig::by_name("nope"), std::invalid_argument);
}

TEST_CASE("config construction guards") {
    CHECK_THROWS_AS(FieldConfig::make(BigInt(97), "small"), std::invalid_argument);
    CHECK_THROWS_AS(FieldConfig::make(BigInt("340282366920938463463374607431768211456"),
                                      "composite"),
                    std::invalid_argument); // 2^128
    CHECK_NOTHROW(FieldConfig::make_small_prime(BigInt(97), "t"));
    CHECK_THROWS_AS(FieldConfig::make_small_prime(BigInt(91), "t"),
                    std::invalid_argument); // 7*13
}

TEST_CASE("arith examples") {
    auto p97 = oracles::tiny97();
    auto fe = [&](std::uint64_t v) { return FieldElement::from_u64(p97, v); };
    CHECK(arith(fe(0), fe(0), ArithKind::add) == fe(0));
    for (std::uint64_t x : {0ull, 1ull, 13ull, 96ull}) {
        CHECK(arith(fe(1), fe(x), ArithKind::mul) == fe(x));
    }
    CHECK(arith(fe(50), fe(60), ArithKind::add) == fe(13));
    CHECK(arith(fe(50), fe(60), ArithKind::sub) == fe((50 + 97 - 60) % 97));
}

TEST_CASE("config mismatch rejected") {
    auto p97 = oracles::tiny97();
    auto bn = FieldConfig::bn254();
    CHECK_THROWS_AS(FieldElement::one(p97) + FieldElement::one(bn),
                    std::invalid_argument);
}

TEST_CASE("inverse") {
    auto p97 = oracles::tiny97();
    CHECK(FieldElement::one(p97).inv() == FieldElement::one(p97));
    // extended-gcd oracle: inv(2) mod 97
    const BigInt expect = oracles::egcd_inverse(BigInt(2), BigInt(97));
    CHECK(expect == 49);
    CHECK(FieldElement::from_u64(p97, 2).inv() == FieldElement(p97, expect));
    CHECK_THROWS_AS(FieldElement::zero(p97).inv(), std::domain_error);
}

TEST_CASE("byte serialization") {
    auto p97 = oracles::tiny97();
    CHECK(p97->byte_width() == 1);
    auto b = FieldElement::from_u64(p97, 13).to_bytes();
    REQUIRE(b.size() == 1);
    CHECK(b[0] == 0x0d);
    const std::uint8_t non_canonical[] = {0x61}; // == 97
    CHECK_THROWS_AS(FieldElement::from_bytes(non_canonical, p97),
                    std::invalid_argument);
    const std::uint8_t too_long[] = {0x01, 0x00};
    CHECK_THROWS_AS(FieldElement::from_bytes(too_long, p97), std::invalid_argument);
}

TEST_CASE("field axioms on random triples") {
    std::mt19937_64 rng(42);
    for (const auto& cfg :
         {oracles::tiny97(), FieldConfig::goldilocks(), FieldConfig::bn254()}) {
        const FieldElement one = FieldElement::one(cfg);
        for (int trial = 0; trial < 3400; ++trial) {
            const FieldElement a = dgkr::random_element(cfg, rng);
            const FieldElement b = dgkr::random_element(cfg, rng);
            const FieldElement c = dgkr::random_element(cfg, rng);
            CHECK((a + b) + c == a + (b + c));
            CHECK((a * b) * c == a * (b * c));
            CHECK(a * (b + c) == a * b + a * c);
            CHECK(a + b == b + a);
            CHECK(a - a == FieldElement::zero(cfg));
            if (!a.is_zero()) {
                CHECK(a * a.inv() == one);
            }
        }
    }
}

TEST_CASE("serialization round trip and injectivity") {
    std::mt19937_64 rng(7);
    auto bn = FieldConfig::bn254();
    std::set<std::vector<std::uint8_t>> seen;
    std::set<dgkr::BigInt> values;
    for (int i = 0; i < 10000; ++i) {
        const FieldElement a = dgkr::random_element(bn, rng);
        auto bytes = a.to_bytes();
        REQUIRE(bytes.size() == bn->byte_width());
        CHECK(FieldElement::from_bytes(bytes, bn) == a);
        seen.insert(std::move(bytes));
        values.insert(a.value());
    }
    CHECK(seen.size() == values.size()); // distinct values, distinct encodings
}
