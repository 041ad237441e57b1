#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "dgkr/circuit.hpp"
#include "oracles.hpp"

using namespace dgkr;
using circuit::AccumulationGate;
using circuit::GateKind;
using circuit::GeneralCircuit;
using circuit::NestedGate;
using circuit::WireRef;

namespace {

/// One accumulation gate adding four inputs: 1 gate, 4 wirings, 1 layer.
GeneralCircuit acc4_circuit() {
    AccumulationGate g;
    g.nested.push_back(NestedGate{GateKind::add, {0, 0}, {0, 1}});
    g.nested.push_back(NestedGate{GateKind::add, {0, 2}, {0, 3}});
    return GeneralCircuit(4, {{g}});
}

std::vector<FieldElement> fes(const FieldConfigPtr& cfg,
                              std::initializer_list<std::uint64_t> vals) {
    std::vector<FieldElement> out;
    for (auto v : vals) out.push_back(FieldElement::from_u64(cfg, v));
    return out;
}

} // namespace

TEST_CASE("accumulation circuit validates and evaluates") {
    auto p97 = oracles::tiny97();
    auto c = acc4_circuit();
    CHECK(c.validate().empty());
    auto out = c.outputs(fes(p97, {1, 2, 3, 4}), p97);
    CHECK(out[0] == FieldElement::from_u64(p97, 10));
    CHECK_THROWS_AS(c.outputs(fes(p97, {1, 2}), p97), std::invalid_argument);
}

TEST_CASE("violations reported, not thrown") {
    // Gate reading its own layer.
    {
        AccumulationGate g;
        g.nested.push_back(NestedGate{GateKind::add, {1, 0}, {0, 0}});
        GeneralCircuit c(2, {{g}});
        auto v = c.validate();
        REQUIRE_FALSE(v.empty());
        CHECK(v.front().find("non-causal") != std::string::npos);
    }
    // Layer with no wire into the previous layer.
    {
        AccumulationGate g1;
        g1.nested.push_back(NestedGate{GateKind::add, {0, 0}, {0, 1}});
        AccumulationGate g2;
        g2.nested.push_back(NestedGate{GateKind::mul, {0, 0}, {0, 1}});
        GeneralCircuit c(2, {{g1}, {g2}});
        auto v = c.validate();
        REQUIRE_FALSE(v.empty());
        CHECK(v.front().find("no wire into layer") != std::string::npos);
    }
    // Dangling wire target.
    {
        AccumulationGate g;
        g.nested.push_back(NestedGate{GateKind::add, {0, 9}, {0, 0}});
        GeneralCircuit c(2, {{g}});
        auto v = c.validate();
        REQUIRE_FALSE(v.empty());
        CHECK(v.front().find("dangling") != std::string::npos);
    }
}

TEST_CASE("identity circuit leaves inputs unchanged") {
    auto p97 = oracles::tiny97();
    // One add gate per input, right operand a constant-zero input slot.
    const std::size_t n = 3;
    std::vector<AccumulationGate> layer;
    for (std::uint32_t i = 0; i < n; ++i) {
        AccumulationGate g;
        g.nested.push_back(NestedGate{GateKind::add, {0, i}, {0, n}});
        layer.push_back(g);
    }
    GeneralCircuit c(n + 1, {layer});
    REQUIRE(c.validate().empty());
    auto out = c.outputs(fes(p97, {5, 6, 7, 0}), p97);
    CHECK(out[0] == FieldElement::from_u64(p97, 5));
    CHECK(out[1] == FieldElement::from_u64(p97, 6));
    CHECK(out[2] == FieldElement::from_u64(p97, 7));
}

TEST_CASE("random circuits match the recursive interpreter") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        circuit::RandomCircuitParams p;
        p.input_size = 4 + rng() % 5;
        p.depth = 3;
        p.max_gates_per_layer = 6;
        auto c = circuit::random_general_circuit(rng, p);
        auto inputs = oracles::random_evals(p.input_size, bn, rng);
        oracles::CircuitInterpreter interp(c, inputs, bn);
        auto expect = interp.outputs();
        auto got = c.outputs(inputs, bn);
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(got[i] == expect[i]);
        }
    }
}

TEST_CASE("index maps cover exactly the used gates") {
    auto c = acc4_circuit();
    REQUIRE(c.validate().empty());
    const auto& map = c.index_map(1, 0);
    CHECK(map == std::vector<std::uint32_t>{0, 1, 2, 3});
    CHECK_THROWS_AS(c.index_map(1, 1), std::out_of_range);
}

TEST_CASE("expansion of the accumulation example") {
    auto p97 = oracles::tiny97();
    auto c = acc4_circuit();
    REQUIRE(c.validate().empty());
    auto e = c.expand_accumulations();
    // 1 layer with 1 gate / 4 wirings becomes 2 layers with 3 gates.
    CHECK(c.depth() == 1);
    CHECK(e.depth() == 2);
    std::size_t gates = 0;
    for (std::size_t li = 1; li <= e.depth(); ++li) gates += e.gates(li).size();
    CHECK(gates == 3);
    for (std::size_t li = 1; li <= e.depth(); ++li) {
        for (const auto& g : e.gates(li)) {
            REQUIRE(g.nested.size() == 1);
            CHECK(g.nested[0].left.layer == li - 1);
            CHECK(g.nested[0].right.layer == li - 1);
        }
    }
    auto out = e.outputs(fes(p97, {1, 2, 3, 4}), p97);
    CHECK(out[0] == FieldElement::from_u64(p97, 10));
}

TEST_CASE("already-layered circuit keeps its layer count") {
    auto p97 = oracles::tiny97();
    AccumulationGate a;
    a.nested.push_back(NestedGate{GateKind::mul, {0, 0}, {0, 1}});
    AccumulationGate b;
    b.nested.push_back(NestedGate{GateKind::add, {1, 0}, {1, 0}});
    GeneralCircuit c(2, {{a}, {b}});
    REQUIRE(c.validate().empty());
    auto e = c.expand_accumulations();
    CHECK(e.depth() == c.depth());
    auto inputs = fes(p97, {3, 5});
    CHECK(e.outputs(inputs, p97)[0] == c.outputs(inputs, p97)[0]);
}

TEST_CASE("balanced k-ary accumulation collapses log2(k) layers into one") {
    auto p97 = oracles::tiny97();
    for (std::size_t k : {4ull, 8ull, 16ull}) {
        AccumulationGate g;
        for (std::uint32_t i = 0; i < k; i += 2) {
            g.nested.push_back(NestedGate{GateKind::add, {0, i}, {0, i + 1}});
        }
        GeneralCircuit c(k, {{g}});
        REQUIRE(c.validate().empty());
        auto e = c.expand_accumulations();
        CHECK(c.depth() == 1);
        std::size_t lg = 0;
        while ((std::size_t{1} << lg) < k) ++lg;
        CHECK(e.depth() == lg);
    }
}

TEST_CASE("expansion preserves outputs on random circuits") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        circuit::RandomCircuitParams p;
        p.input_size = 4;
        p.depth = 3;
        p.max_gates_per_layer = 5;
        p.max_nested = 4;
        auto c = circuit::random_general_circuit(rng, p);
        auto e = c.expand_accumulations();
        CHECK(c.depth() <= e.depth());
        const std::size_t n_out = c.layer_size(c.output_layer());
        REQUIRE(e.layer_size(e.output_layer()) == n_out);
        for (int rep = 0; rep < 10; ++rep) {
            auto inputs = oracles::random_evals(4, bn, rng);
            auto co = c.outputs(inputs, bn);
            auto eo = e.outputs(inputs, bn);
            for (std::size_t i = 0; i < n_out; ++i) {
                CHECK(co[i] == eo[i]);
            }
        }
    }
}

TEST_CASE("sparse wire lists reconstruct the layer equation") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(23);
    circuit::RandomCircuitParams p;
    p.input_size = 8;
    p.depth = 4;
    p.max_gates_per_layer = 16;
    auto c = circuit::random_general_circuit(rng, p);
    auto inputs = oracles::random_evals(8, bn, rng);
    auto values = c.evaluate(inputs, bn);
    for (std::size_t li = 1; li <= c.depth(); ++li) {
        std::vector<FieldElement> recon(c.padded_size(li), FieldElement::zero(bn));
        for (std::size_t gi = 0; gi < c.gates(li).size(); ++gi) {
            for (const auto& ng : c.gates(li)[gi].nested) {
                const FieldElement a = values[ng.left.layer][ng.left.gate];
                const FieldElement b = values[ng.right.layer][ng.right.gate];
                recon[gi] += ng.kind == GateKind::add ? a + b : a * b;
            }
        }
        for (std::size_t gi = 0; gi < recon.size(); ++gi) {
            CHECK(recon[gi] == values[li][gi]);
        }
    }
}

TEST_CASE("json round trip") {
    auto p97 = oracles::tiny97();
    auto c = acc4_circuit();
    REQUIRE(c.validate().empty());
    std::stringstream ss;
    ss << c.to_json().dump();
    nlohmann::json j;
    ss >> j;
    auto back = GeneralCircuit::from_json(j);
    REQUIRE(back.validate().empty());
    CHECK(back.outputs(fes(p97, {1, 2, 3, 4}), p97)[0] ==
          FieldElement::from_u64(p97, 10));
    CHECK(back.to_json() == c.to_json());
}
