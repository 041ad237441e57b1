#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgkr/field.hpp"

namespace dgkr::circuit {

enum class GateKind { add, mul };

/// Address of a gate: layer 0 is the input layer, higher layers sit closer
/// to the output. Wires may reach any strictly earlier layer.
struct WireRef {
    std::uint32_t layer = 0;
    std::uint32_t gate = 0;

    bool operator==(const WireRef&) const = default;
};

struct NestedGate {
    GateKind kind = GateKind::add;
    WireRef left;
    WireRef right;
};

/// A gate whose value is the sum of its nested fan-in-2 gates. A plain gate
/// is the one-nested-gate special case.
struct AccumulationGate {
    std::vector<NestedGate> nested;
};

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct RandomCircuitParams {
    std::size_t input_size = 4;
    std::size_t depth = 3;
    std::size_t max_gates_per_layer = 8;
    std::size_t max_nested = 3;
    unsigned mul_percent = 50;
};

inline std::size_t log2_exact(std::size_t n) {
    std::size_t l = 0;
    while ((std::size_t{1} << l) < n) ++l;
    return l;
}

class GeneralCircuit {
public:
    GeneralCircuit(std::size_t input_size,
                   std::vector<std::vector<AccumulationGate>> layers)
        : input_size_(input_size), layers_(std::move(layers)) {
        min_padded_.assign(layers_.size() + 1, 1);
    }

    std::size_t input_size() const { return input_size_; }
    /// Gate layers only; total addressable layers are depth() + 1 with the
    /// input layer at index 0.
    std::size_t depth() const { return layers_.size(); }
    std::size_t output_layer() const { return layers_.size(); }

    std::size_t layer_size(std::size_t layer) const {
        return layer == 0 ? input_size_ : layers_.at(layer - 1).size();
    }

    std::size_t padded_size(std::size_t layer) const {
        return std::max(next_pow2(std::max<std::size_t>(layer_size(layer), 1)),
                        min_padded_.at(layer));
    }

    std::size_t padded_log2(std::size_t layer) const {
        return log2_exact(padded_size(layer));
    }

    const std::vector<AccumulationGate>& gates(std::size_t layer) const {
        return layers_.at(layer - 1);
    }

    /// Forces extra zero slots in a layer (used by expansion to source
    /// relay operands). Never shrinks.
    void reserve_padding(std::size_t layer, std::size_t min_size) {
        min_padded_.at(layer) = std::max(min_padded_.at(layer), next_pow2(min_size));
    }

    /// Structural checks; returns human-readable violations instead of
    /// throwing. On a clean result the per-layer-pair index maps are built
    /// and the circuit is marked validated.
    std::vector<std::string> validate() {
        std::vector<std::string> violations;
        auto wire_name = [](std::size_t layer, std::size_t gate, const char* side) {
            return "layer " + std::to_string(layer) + " gate " + std::to_string(gate) +
                   " " + side;
        };
        for (std::size_t li = 1; li <= depth(); ++li) {
            bool reads_prev = false;
            const auto& layer = layers_[li - 1];
            if (layer.empty()) {
                violations.push_back("layer " + std::to_string(li) + " has no gates");
            }
            for (std::size_t gi = 0; gi < layer.size(); ++gi) {
                if (layer[gi].nested.empty()) {
                    violations.push_back("layer " + std::to_string(li) + " gate " +
                                         std::to_string(gi) + " has no nested gates");
                    continue;
                }
                for (const auto& ng : layer[gi].nested) {
                    for (const auto& [ref, side] :
                         {std::pair{ng.left, "left"}, std::pair{ng.right, "right"}}) {
                        if (ref.layer >= li) {
                            violations.push_back("non-causal wire at " +
                                                 wire_name(li, gi, side));
                            continue;
                        }
                        if (ref.gate >= padded_size(ref.layer)) {
                            violations.push_back("dangling wire at " +
                                                 wire_name(li, gi, side));
                            continue;
                        }
                        if (ref.layer + 1 == li) reads_prev = true;
                    }
                }
            }
            if (!layer.empty() && !reads_prev) {
                violations.push_back("layer " + std::to_string(li) +
                                     " has no wire into layer " + std::to_string(li - 1));
            }
        }
        if (violations.empty()) {
            build_index_maps();
            if (auto mismatch = check_index_maps()) {
                violations.push_back(*mismatch);
            } else {
                validated_ = true;
            }
        }
        return violations;
    }

    bool validated() const { return validated_; }

    void require_valid() const {
        if (!validated_) {
            throw std::logic_error("circuit must be validated first");
        }
    }

    /// Layer-by-layer evaluation. Every layer's value table is padded to a
    /// power of two; padding positions hold zero.
    std::vector<std::vector<FieldElement>> evaluate(
        std::span<const FieldElement> inputs, const FieldConfigPtr& cfg) const {
        require_valid();
        if (inputs.size() != input_size_) {
            throw std::invalid_argument("input size mismatch");
        }
        std::vector<std::vector<FieldElement>> values;
        values.reserve(depth() + 1);
        const FieldElement zero = FieldElement::zero(cfg);
        {
            std::vector<FieldElement> v(inputs.begin(), inputs.end());
            v.resize(padded_size(0), zero);
            values.push_back(std::move(v));
        }
        for (std::size_t li = 1; li <= depth(); ++li) {
            std::vector<FieldElement> v(padded_size(li), zero);
            const auto& layer = layers_[li - 1];
            for (std::size_t gi = 0; gi < layer.size(); ++gi) {
                FieldElement acc = zero;
                for (const auto& ng : layer[gi].nested) {
                    const FieldElement& a = values[ng.left.layer][ng.left.gate];
                    const FieldElement& b = values[ng.right.layer][ng.right.gate];
                    acc += (ng.kind == GateKind::add) ? a + b : a * b;
                }
                v[gi] = acc;
            }
            values.push_back(std::move(v));
        }
        return values;
    }

    std::vector<FieldElement> outputs(std::span<const FieldElement> inputs,
                                      const FieldConfigPtr& cfg) const {
        return evaluate(inputs, cfg).back();
    }

    /// Used-gate index map for a (consumer, source) layer pair: ascending
    /// source gate ids, densely renumbered by position.
    const std::vector<std::uint32_t>& index_map(std::size_t consumer,
                                                std::size_t source) const {
        require_valid();
        auto it = index_maps_.find({consumer, source});
        if (it == index_maps_.end()) {
            throw std::out_of_range("no wires between the given layer pair");
        }
        return it->second;
    }

    std::vector<std::size_t> source_layers(std::size_t consumer) const {
        std::set<std::size_t> srcs;
        for (const auto& g : gates(consumer)) {
            for (const auto& ng : g.nested) {
                srcs.insert(ng.left.layer);
                srcs.insert(ng.right.layer);
            }
        }
        return {srcs.begin(), srcs.end()};
    }

    /// Semantically equivalent circuit with one nested gate per gate and
    /// only adjacent-layer wiring; relay gates carry skipped values forward.
    GeneralCircuit expand_accumulations() const;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["input_size"] = input_size_;
        nlohmann::ordered_json layers = nlohmann::ordered_json::array();
        for (const auto& layer : layers_) {
            nlohmann::ordered_json gl = nlohmann::ordered_json::array();
            for (const auto& g : layer) {
                nlohmann::ordered_json nested = nlohmann::ordered_json::array();
                for (const auto& ng : g.nested) {
                    nested.push_back({
                        {"op", ng.kind == GateKind::add ? "add" : "mul"},
                        {"left", {ng.left.layer, ng.left.gate}},
                        {"right", {ng.right.layer, ng.right.gate}},
                    });
                }
                gl.push_back({{"nested", nested}});
            }
            layers.push_back(gl);
        }
        j["layers"] = layers;
        return j;
    }

    static GeneralCircuit from_json(const nlohmann::json& j) {
        std::vector<std::vector<AccumulationGate>> layers;
        for (const auto& jl : j.at("layers")) {
            std::vector<AccumulationGate> layer;
            for (const auto& jg : jl) {
                AccumulationGate g;
                for (const auto& jn : jg.at("nested")) {
                    NestedGate ng;
                    const std::string op = jn.at("op").get<std::string>();
                    if (op == "add") {
                        ng.kind = GateKind::add;
                    } else if (op == "mul") {
                        ng.kind = GateKind::mul;
                    } else {
                        throw std::invalid_argument("unknown gate op: " + op);
                    }
                    ng.left = {jn.at("left").at(0).get<std::uint32_t>(),
                               jn.at("left").at(1).get<std::uint32_t>()};
                    ng.right = {jn.at("right").at(0).get<std::uint32_t>(),
                                jn.at("right").at(1).get<std::uint32_t>()};
                    g.nested.push_back(ng);
                }
                layer.push_back(std::move(g));
            }
            layers.push_back(std::move(layer));
        }
        return GeneralCircuit(j.at("input_size").get<std::size_t>(), std::move(layers));
    }

private:
    void build_index_maps() {
        index_maps_.clear();
        std::map<std::pair<std::size_t, std::size_t>, std::set<std::uint32_t>> used;
        for (std::size_t li = 1; li <= depth(); ++li) {
            for (const auto& g : layers_[li - 1]) {
                for (const auto& ng : g.nested) {
                    used[{li, ng.left.layer}].insert(ng.left.gate);
                    used[{li, ng.right.layer}].insert(ng.right.gate);
                }
            }
        }
        for (auto& [key, set] : used) {
            index_maps_[key] = std::vector<std::uint32_t>(set.begin(), set.end());
        }
    }

    /// The maps must cover exactly the gates actually referenced.
    std::optional<std::string> check_index_maps() const {
        for (std::size_t li = 1; li <= depth(); ++li) {
            std::map<std::size_t, std::set<std::uint32_t>> referenced;
            for (const auto& g : layers_[li - 1]) {
                for (const auto& ng : g.nested) {
                    referenced[ng.left.layer].insert(ng.left.gate);
                    referenced[ng.right.layer].insert(ng.right.gate);
                }
            }
            for (const auto& [src, gates] : referenced) {
                auto it = index_maps_.find({li, src});
                if (it == index_maps_.end() ||
                    it->second != std::vector<std::uint32_t>(gates.begin(), gates.end())) {
                    return "index map mismatch for layers " + std::to_string(li) +
                           " <- " + std::to_string(src);
                }
            }
        }
        return std::nullopt;
    }

    std::size_t input_size_;
    std::vector<std::vector<AccumulationGate>> layers_;
    std::vector<std::size_t> min_padded_;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::uint32_t>> index_maps_;
    bool validated_ = false;
};

/*
 * Expansion runs in two stages.
 *
 * Stage 1 flattens every accumulation gate into a balanced addition tree:
 * original layer li becomes a block of levels whose first level lists all
 * nested gates and whose last level holds the original gates in order.
 * Operand references still use original addresses (cross-layer), except
 * references into padding, which become a zero sentinel.
 *
 * Stage 2 walks the flattened levels and localizes all wiring to the
 * adjacent layer, inserting relay gates (add with a zero slot) for values
 * consumed more than one level after production. Zero-slot positions are a
 * sentinel during construction and patched to each layer's first padding
 * index once gate counts are final.
 */
/// Random valid general circuit: accumulation gates of mixed kinds, wires
/// into arbitrary earlier layers, with the layer-(i-1) rule patched in.
template <typename Rng>
GeneralCircuit random_general_circuit(Rng& rng, const RandomCircuitParams& p) {
    auto pick = [&](std::size_t bound) {
        return static_cast<std::uint32_t>(rng() % bound);
    };
    std::vector<std::size_t> sizes{p.input_size};
    std::vector<std::vector<AccumulationGate>> layers;
    for (std::size_t li = 1; li <= p.depth; ++li) {
        const std::size_t n_gates = 1 + pick(p.max_gates_per_layer);
        std::vector<AccumulationGate> layer;
        bool reads_prev = false;
        for (std::size_t gi = 0; gi < n_gates; ++gi) {
            AccumulationGate g;
            const std::size_t m = 1 + pick(p.max_nested);
            for (std::size_t k = 0; k < m; ++k) {
                NestedGate ng;
                ng.kind = (rng() % 100 < p.mul_percent) ? GateKind::mul : GateKind::add;
                const std::uint32_t ll = pick(li);
                const std::uint32_t rl = pick(li);
                ng.left = WireRef{ll, pick(sizes[ll])};
                ng.right = WireRef{rl, pick(sizes[rl])};
                if (ll + 1 == li || rl + 1 == li) reads_prev = true;
                g.nested.push_back(ng);
            }
            layer.push_back(std::move(g));
        }
        if (!reads_prev) {
            layer.front().nested.front().left =
                WireRef{static_cast<std::uint32_t>(li - 1), pick(sizes[li - 1])};
        }
        sizes.push_back(layer.size());
        layers.push_back(std::move(layer));
    }
    GeneralCircuit c(p.input_size, std::move(layers));
    auto violations = c.validate();
    if (!violations.empty()) {
        throw std::logic_error("random circuit invalid: " + violations.front());
    }
    return c;
}

inline GeneralCircuit GeneralCircuit::expand_accumulations() const {
    require_valid();

    static constexpr std::uint32_t kZeroSentinel = 0xffffffffu;

    struct FlatGate {
        GateKind kind = GateKind::add;
        // refs: layer/gate in *original* addressing for level-0 gates,
        // or {block-relative previous level, node} for tree gates, flagged
        // by `internal`.
        WireRef left, right;
        bool left_internal = false;
        bool right_internal = false;
    };

    std::vector<std::vector<FlatGate>> flat;        // levels, 0-based
    std::vector<std::size_t> gate_level(depth() + 1, 0); // orig layer -> 1-based flat level

    auto orig_or_zero = [&](const WireRef& ref) {
        if (ref.gate >= layer_size(ref.layer)) {
            return WireRef{ref.layer, kZeroSentinel};
        }
        return ref;
    };

    for (std::size_t li = 1; li <= depth(); ++li) {
        const auto& layer = layers_[li - 1];
        // Level of nested gates.
        std::vector<std::vector<std::uint32_t>> nodes(layer.size());
        {
            std::vector<FlatGate> level;
            for (std::size_t gi = 0; gi < layer.size(); ++gi) {
                for (const auto& ng : layer[gi].nested) {
                    nodes[gi].push_back(static_cast<std::uint32_t>(level.size()));
                    level.push_back(FlatGate{ng.kind, orig_or_zero(ng.left),
                                             orig_or_zero(ng.right), false, false});
                }
            }
            flat.push_back(std::move(level));
        }
        // Pairwise-add levels until each original gate owns a single node.
        auto more = [&]() {
            for (const auto& n : nodes) {
                if (n.size() > 1) return true;
            }
            return false;
        };
        while (more()) {
            std::vector<FlatGate> level;
            for (std::size_t gi = 0; gi < layer.size(); ++gi) {
                std::vector<std::uint32_t> next;
                for (std::size_t k = 0; k < nodes[gi].size(); k += 2) {
                    FlatGate fg;
                    fg.kind = GateKind::add;
                    fg.left = WireRef{0, nodes[gi][k]};
                    fg.left_internal = true;
                    if (k + 1 < nodes[gi].size()) {
                        fg.right = WireRef{0, nodes[gi][k + 1]};
                        fg.right_internal = true;
                    } else {
                        fg.right = WireRef{0, kZeroSentinel}; // relay odd node
                        fg.right_internal = true;
                    }
                    next.push_back(static_cast<std::uint32_t>(level.size()));
                    level.push_back(fg);
                }
                nodes[gi] = std::move(next);
            }
            flat.push_back(std::move(level));
        }
        gate_level[li] = flat.size();
    }

    const std::size_t total = flat.size();

    // Where each original gate output lives in flat addressing.
    // Internal tree refs are already adjacent; only level-0 refs of each
    // block need the lookup.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<std::size_t, std::uint32_t>>
        produced; // orig (layer, gate) -> (flat level, node); level 0 = inputs
    for (std::uint32_t g = 0; g < input_size_; ++g) {
        produced[{0u, g}] = {0, g};
    }
    {
        std::size_t li = 1;
        for (std::size_t lvl = 1; lvl <= total; ++lvl) {
            if (lvl == gate_level[li]) {
                // Recover gate order: final level was emitted per gate.
                const auto& layer = layers_[li - 1];
                for (std::uint32_t gi = 0; gi < layer.size(); ++gi) {
                    produced[{static_cast<std::uint32_t>(li), gi}] = {lvl, gi};
                }
                ++li;
            }
        }
    }

    // last_use[flat value] = last flat level consuming it, for relay planning.
    std::map<std::pair<std::size_t, std::uint32_t>, std::size_t> last_use;
    auto note_use = [&](const FlatGate& fg, std::size_t lvl) {
        auto note = [&](const WireRef& ref, bool internal) {
            if (ref.gate == kZeroSentinel) return;
            std::pair<std::size_t, std::uint32_t> key;
            if (internal) {
                key = {lvl - 1, ref.gate};
            } else {
                key = produced.at({ref.layer, ref.gate});
            }
            auto [it, inserted] = last_use.try_emplace(key, lvl);
            if (!inserted) it->second = std::max(it->second, lvl);
        };
        note(fg.left, fg.left_internal);
        note(fg.right, fg.right_internal);
    };
    for (std::size_t lvl = 1; lvl <= total; ++lvl) {
        for (const auto& fg : flat[lvl - 1]) note_use(fg, lvl);
    }

    // Stage 2: emit localized layers with relays.
    std::vector<std::vector<AccumulationGate>> out_layers(total);
    // alive: flat value -> position in the previous emitted layer.
    std::map<std::pair<std::size_t, std::uint32_t>, std::uint32_t> alive;
    for (std::uint32_t g = 0; g < input_size_; ++g) {
        alive[{0, g}] = g;
    }
    for (std::size_t lvl = 1; lvl <= total; ++lvl) {
        const std::uint32_t prev = static_cast<std::uint32_t>(lvl - 1);
        auto resolve = [&](const WireRef& ref, bool internal) {
            if (ref.gate == kZeroSentinel) {
                return WireRef{prev, kZeroSentinel};
            }
            const auto key = internal
                                 ? std::pair<std::size_t, std::uint32_t>{lvl - 1, ref.gate}
                                 : produced.at({ref.layer, ref.gate});
            return WireRef{prev, alive.at(key)};
        };
        for (const auto& fg : flat[lvl - 1]) {
            AccumulationGate g;
            g.nested.push_back(NestedGate{fg.kind, resolve(fg.left, fg.left_internal),
                                          resolve(fg.right, fg.right_internal)});
            out_layers[lvl - 1].push_back(std::move(g));
        }
        // Forward values still needed above this level.
        std::map<std::pair<std::size_t, std::uint32_t>, std::uint32_t> next_alive;
        for (std::uint32_t node = 0; node < flat[lvl - 1].size(); ++node) {
            next_alive[{lvl, node}] = node;
        }
        for (const auto& [key, pos] : alive) {
            auto lu = last_use.find(key);
            if (lu != last_use.end() && lu->second > lvl) {
                AccumulationGate relay;
                relay.nested.push_back(NestedGate{GateKind::add, WireRef{prev, pos},
                                                  WireRef{prev, kZeroSentinel}});
                next_alive[key] =
                    static_cast<std::uint32_t>(out_layers[lvl - 1].size());
                out_layers[lvl - 1].push_back(std::move(relay));
            }
        }
        alive = std::move(next_alive);
    }

    // Patch zero sentinels to real padding slots now that counts are final.
    GeneralCircuit expanded(input_size_, std::move(out_layers));
    std::vector<bool> needs_zero(total + 1, false);
    for (std::size_t lvl = 1; lvl <= expanded.depth(); ++lvl) {
        for (const auto& g : expanded.layers_[lvl - 1]) {
            for (const auto& ng : g.nested) {
                if (ng.left.gate == kZeroSentinel || ng.right.gate == kZeroSentinel) {
                    needs_zero[lvl - 1] = true;
                }
            }
        }
    }
    std::vector<std::uint32_t> zero_slot(total + 1, 0);
    for (std::size_t lvl = 0; lvl <= expanded.depth(); ++lvl) {
        if (!needs_zero[lvl]) continue;
        const std::size_t real = expanded.layer_size(lvl);
        zero_slot[lvl] = static_cast<std::uint32_t>(real);
        if (expanded.padded_size(lvl) <= real) {
            expanded.reserve_padding(lvl, real + 1);
        }
    }
    for (std::size_t lvl = 1; lvl <= expanded.depth(); ++lvl) {
        for (auto& g : expanded.layers_[lvl - 1]) {
            for (auto& ng : g.nested) {
                if (ng.left.gate == kZeroSentinel) ng.left.gate = zero_slot[lvl - 1];
                if (ng.right.gate == kZeroSentinel) ng.right.gate = zero_slot[lvl - 1];
            }
        }
    }
    auto violations = expanded.validate();
    if (!violations.empty()) {
        throw std::logic_error("expansion produced invalid circuit: " +
                               violations.front());
    }
    return expanded;
}

} // namespace dgkr::circuit
