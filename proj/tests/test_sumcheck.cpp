#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "dgkr/counters.hpp"
#include "dgkr/sumcheck.hpp"
#include "dgkr/transcript.hpp"
#include "oracles.hpp"

using namespace dgkr;
using sumcheck::ProductPair;
using sumcheck::SumcheckProof;

namespace {

std::vector<ProductPair> random_pairs(std::size_t n_pairs, std::size_t vars,
                                      const FieldConfigPtr& cfg,
                                      std::mt19937_64& rng) {
    std::vector<ProductPair> out;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        out.push_back(ProductPair{oracles::random_table(vars, cfg, rng),
                                  oracles::random_table(vars, cfg, rng)});
    }
    return out;
}

SumcheckProof prove(const std::vector<ProductPair>& pairs, const FieldConfigPtr& cfg,
                    std::uint64_t label = 0) {
    Transcript tr("test.sumcheck", cfg);
    tr.absorb_u64(label);
    return sumcheck::prove_product_sum(pairs, tr);
}

sumcheck::ProductVerifyResult verify(const FieldElement& claim,
                                     const SumcheckProof& proof,
                                     const FieldConfigPtr& cfg,
                                     std::uint64_t label = 0) {
    Transcript tr("test.sumcheck", cfg);
    tr.absorb_u64(label);
    return sumcheck::verify_product_sum(claim, proof, tr);
}

} // namespace

TEST_CASE("transcript determinism and challenge range") {
    auto bn = FieldConfig::bn254();
    Transcript a("t", bn), b("t", bn);
    a.absorb_u64(5);
    b.absorb_u64(5);
    auto ca = a.challenge();
    auto cb = b.challenge();
    CHECK(ca == cb);
    CHECK(a.challenge() != ca); // draw counter separates challenges
    Transcript c("other-label", bn);
    c.absorb_u64(5);
    CHECK(c.challenge() != ca);

    auto p97 = oracles::tiny97();
    Transcript small("t", p97);
    for (int i = 0; i < 200; ++i) {
        CHECK(small.challenge().value() < 97);
    }
    CHECK(small.challenge_index(10) < 10);
}

TEST_CASE("zero pair accepted") {
    auto p97 = oracles::tiny97();
    std::vector<ProductPair> pairs{
        ProductPair{MultilinearTable::zeros(p97, 3), MultilinearTable::zeros(p97, 3)}};
    auto proof = prove(pairs, p97);
    CHECK(proof.claimed_sum == FieldElement::zero(p97));
    CHECK(verify(proof.claimed_sum, proof, p97).accept);
}

TEST_CASE("one-variable example") {
    auto p97 = oracles::tiny97();
    std::vector<ProductPair> pairs{ProductPair{
        MultilinearTable(p97, 1,
                         {FieldElement::from_u64(p97, 1), FieldElement::from_u64(p97, 2)}),
        MultilinearTable(p97, 1, {FieldElement::from_u64(p97, 3),
                                  FieldElement::from_u64(p97, 4)})}};
    auto proof = prove(pairs, p97);
    CHECK(proof.claimed_sum == FieldElement::from_u64(p97, 11)); // 1*3 + 2*4
    CHECK(verify(proof.claimed_sum, proof, p97).accept);
}

TEST_CASE("claimed sum matches brute force") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(11);
    auto pairs = random_pairs(1, 4, bn, rng);
    auto proof = prove(pairs, bn);
    CHECK(proof.claimed_sum == oracles::brute_product_sum(pairs, bn));
}

TEST_CASE("completeness and final factor claims") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t vars = 1 + rng() % 8;
        const std::size_t n_pairs = 1 + rng() % 3;
        auto pairs = random_pairs(n_pairs, vars, bn, rng);
        auto proof = prove(pairs, bn, trial);
        auto res = verify(proof.claimed_sum, proof, bn, trial);
        REQUIRE(res.accept);
        REQUIRE(res.final_point.size() == vars);
        for (std::size_t k = 0; k < n_pairs; ++k) {
            CHECK(res.factor_claims[2 * k] == pairs[k].f.eval(res.final_point));
            CHECK(res.factor_claims[2 * k + 1] == pairs[k].g.eval(res.final_point));
        }
    }
}

TEST_CASE("wrong claim rejected") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(13);
    auto pairs = random_pairs(2, 5, bn, rng);
    auto proof = prove(pairs, bn);
    const FieldElement one = FieldElement::one(bn);
    CHECK_FALSE(verify(proof.claimed_sum + one, proof, bn).accept);
}

TEST_CASE("single element mutations rejected") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(14);
    auto pairs = random_pairs(2, 4, bn, rng);
    auto proof = prove(pairs, bn);
    REQUIRE(verify(proof.claimed_sum, proof, bn).accept);
    const FieldElement one = FieldElement::one(bn);
    for (int t = 0; t < 30; ++t) {
        SumcheckProof mutated = proof;
        const std::size_t n_coeffs = 4 * mutated.rounds.size();
        const std::size_t n_targets = 1 + n_coeffs + mutated.final_evals.size();
        std::size_t pick = rng() % n_targets;
        if (pick == 0) {
            mutated.claimed_sum += one;
        } else if (pick <= n_coeffs) {
            mutated.rounds[(pick - 1) / 4].coeffs[(pick - 1) % 4] += one;
        } else {
            mutated.final_evals[pick - 1 - n_coeffs] += one;
        }
        CHECK_FALSE(verify(proof.claimed_sum, mutated, bn).accept);
    }
}

TEST_CASE("mixed table sizes rejected") {
    auto p97 = oracles::tiny97();
    std::mt19937_64 rng(15);
    std::vector<ProductPair> pairs{
        ProductPair{oracles::random_table(2, p97, rng),
                    oracles::random_table(2, p97, rng)},
        ProductPair{oracles::random_table(3, p97, rng),
                    oracles::random_table(3, p97, rng)}};
    Transcript tr("test.sumcheck", p97);
    CHECK_THROWS_AS(sumcheck::prove_product_sum(pairs, tr), std::invalid_argument);
}

TEST_CASE("prover work is linear in table size") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(16);
    const std::size_t vars = 10;
    const std::size_t n_pairs = 2;
    auto pairs = random_pairs(n_pairs, vars, bn, rng);
    ops::counters().reset();
    auto proof = prove(pairs, bn);
    const std::uint64_t touches = ops::counters().table_touches;
    // Over all rounds the live table sizes sum to 2^{l+1}; a fixed
    // per-element constant covers the round scan, the folds and the initial
    // total. The budget is far below the l * 2^l of a naive prover.
    const std::uint64_t budget = 16 * n_pairs * (std::uint64_t{1} << vars);
    CHECK(touches <= budget);
    CHECK(verify(proof.claimed_sum, proof, bn).accept);
}

TEST_CASE("proof serialization round trip") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(17);
    auto pairs = random_pairs(2, 3, bn, rng);
    auto proof = prove(pairs, bn);
    auto bytes = proof.to_bytes();
    auto back = SumcheckProof::from_bytes(bytes, bn);
    CHECK(back.to_bytes() == bytes);
    CHECK(verify(back.claimed_sum, back, bn).accept);
}

TEST_CASE("layer sumcheck: single mult wire with one-hot table") {
    auto p97 = oracles::tiny97();
    // V over 2 vars; one mult wire (x0=2, y0=1), output weight 1.
    std::vector<FieldElement> v{
        FieldElement::from_u64(p97, 0), FieldElement::from_u64(p97, 5),
        FieldElement::from_u64(p97, 7), FieldElement::from_u64(p97, 0)};
    sumcheck::LayerInstance inst;
    inst.side_vars = 2;
    inst.slot_tables.emplace_back(p97, 2, v);
    inst.wires.push_back(sumcheck::LayerWire{true, FieldElement::one(p97), 0, 0, 2, 1});
    const FieldElement claimed = v[2] * v[1]; // V[x0] * V[y0] = 7*5
    Transcript tr("test.layer", p97);
    auto run = sumcheck::prove_layer_sum(inst, claimed, tr);
    Transcript vtr("test.layer", p97);
    auto res = sumcheck::verify_layer_sum(claimed, 2, 1, inst.wires, run.proof, vtr);
    REQUIRE(res.accept);
    CHECK(res.x_slot_claims[0] == inst.slot_tables[0].eval(res.x_point));
    CHECK(res.y_slot_claims[0] == inst.slot_tables[0].eval(res.y_point));
}

TEST_CASE("layer sumcheck: four add wires summing the inputs") {
    auto p97 = oracles::tiny97();
    // One output gate accumulating add(in0,in1) + add(in2,in3) over inputs
    // (1,2,3,4): claimed output 10. Output layer has a single gate, so the
    // claim point is empty and every wire weight is 1.
    std::vector<FieldElement> v{
        FieldElement::from_u64(p97, 1), FieldElement::from_u64(p97, 2),
        FieldElement::from_u64(p97, 3), FieldElement::from_u64(p97, 4)};
    sumcheck::LayerInstance inst;
    inst.side_vars = 2;
    inst.slot_tables.emplace_back(p97, 2, v);
    inst.wires.push_back(sumcheck::LayerWire{false, FieldElement::one(p97), 0, 0, 0, 1});
    inst.wires.push_back(sumcheck::LayerWire{false, FieldElement::one(p97), 0, 0, 2, 3});
    const FieldElement claimed = FieldElement::from_u64(p97, 10);
    Transcript tr("test.layer", p97);
    auto run = sumcheck::prove_layer_sum(inst, claimed, tr);
    Transcript vtr("test.layer", p97);
    CHECK(sumcheck::verify_layer_sum(claimed, 2, 1, inst.wires, run.proof, vtr).accept);
}

TEST_CASE("layer sumcheck matches brute-force double sum") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(18);
    const std::size_t s = 2;
    auto table = oracles::random_table(s, bn, rng);
    sumcheck::LayerInstance inst;
    inst.side_vars = s;
    inst.slot_tables.push_back(table);
    for (int w = 0; w < 16; ++w) {
        inst.wires.push_back(sumcheck::LayerWire{
            (rng() % 2) == 0, dgkr::random_element(bn, rng), 0, 0, rng() % 4,
            rng() % 4});
    }
    // O(4^s) oracle over all (x, y).
    FieldElement expected = FieldElement::zero(bn);
    for (const auto& w : inst.wires) {
        const FieldElement vx = table[w.x_index];
        const FieldElement vy = table[w.y_index];
        expected += w.weight * (w.is_mul ? vx * vy : vx + vy);
    }
    Transcript tr("test.layer", bn);
    auto run = sumcheck::prove_layer_sum(inst, expected, tr);
    Transcript vtr("test.layer", bn);
    auto res =
        sumcheck::verify_layer_sum(expected, s, 1, inst.wires, run.proof, vtr);
    REQUIRE(res.accept);

    // Tampering the claim breaks it.
    Transcript vtr2("test.layer", bn);
    CHECK_FALSE(sumcheck::verify_layer_sum(expected + FieldElement::one(bn), s, 1,
                                           inst.wires, run.proof, vtr2)
                    .accept);
}
