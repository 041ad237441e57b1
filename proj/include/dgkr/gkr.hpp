#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dgkr/circuit.hpp"
#include "dgkr/field.hpp"
#include "dgkr/mle.hpp"
#include "dgkr/sumcheck.hpp"
#include "dgkr/transcript.hpp"

namespace dgkr::gkr {

/// A weighted evaluation target on one layer's multilinear extension:
/// sum_t weight_t * V~(point_t) = value. Plain claims have a single term
/// with weight 1; claim folding and padding translation produce the general
/// form.
struct ClaimTerm {
    std::vector<FieldElement> point;
    FieldElement weight;
};

struct LayerClaim {
    std::size_t layer = 0;
    std::vector<ClaimTerm> terms;
    FieldElement value;

    static LayerClaim simple(std::size_t layer, std::vector<FieldElement> point,
                             FieldElement value) {
        LayerClaim c;
        c.layer = layer;
        c.terms.push_back(
            ClaimTerm{std::move(point), FieldElement::one(value.config())});
        c.value = std::move(value);
        return c;
    }
};

/// Folds several claims on one layer into one with a single transcript
/// challenge alpha and weights alpha^k; terms at identical points merge.
/// A single claim passes through untouched (no challenge drawn).
inline LayerClaim combine_claims(std::vector<LayerClaim> claims,
                                 Transcript& transcript,
                                 std::vector<FieldElement>* alpha_record = nullptr) {
    if (claims.empty()) {
        throw std::invalid_argument("no claims to combine");
    }
    for (const auto& c : claims) {
        if (c.layer != claims.front().layer) {
            throw std::invalid_argument("claims span different layers");
        }
    }
    if (claims.size() == 1) {
        return std::move(claims.front());
    }
    const FieldConfigPtr cfg = claims.front().value.config();
    const FieldElement alpha = transcript.challenge();
    if (alpha_record) alpha_record->push_back(alpha);
    LayerClaim out;
    out.layer = claims.front().layer;
    out.value = FieldElement::zero(cfg);
    FieldElement scale = FieldElement::one(cfg);
    for (auto& c : claims) {
        out.value += scale * c.value;
        for (auto& t : c.terms) {
            const FieldElement w = scale * t.weight;
            bool merged = false;
            for (auto& ot : out.terms) {
                if (ot.point == t.point) {
                    ot.weight += w;
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                out.terms.push_back(ClaimTerm{std::move(t.point), w});
            }
        }
        scale *= alpha;
    }
    return out;
}

struct GkrLayerProof {
    sumcheck::SumcheckProof sum;
    /// Claim-combination challenges drawn for this layer (zero or one).
    std::vector<FieldElement> alphas;
};

struct GkrProof {
    std::vector<FieldElement> claimed_outputs; // padded output table
    std::vector<GkrLayerProof> layers;         // output layer first
};

namespace detail {

/// Source-slot layout and wires for one consumer layer's reduction. All
/// slots share side_vars variables, the largest padded source size.
struct LayerPlan {
    std::vector<std::size_t> slot_layers;
    std::size_t side_vars = 0;
    std::vector<sumcheck::LayerWire> wires; // weights filled per claim
};

inline LayerPlan plan_layer(const circuit::GeneralCircuit& c, std::size_t consumer) {
    LayerPlan plan;
    plan.slot_layers = c.source_layers(consumer);
    for (std::size_t src : plan.slot_layers) {
        plan.side_vars = std::max(plan.side_vars, c.padded_log2(src));
    }
    auto slot_of = [&](std::size_t layer) {
        for (std::size_t s = 0; s < plan.slot_layers.size(); ++s) {
            if (plan.slot_layers[s] == layer) return static_cast<std::uint32_t>(s);
        }
        throw std::logic_error("source layer missing from slot list");
    };
    for (const auto& gate : c.gates(consumer)) {
        for (const auto& ng : gate.nested) {
            sumcheck::LayerWire w;
            w.is_mul = (ng.kind == circuit::GateKind::mul);
            w.x_slot = slot_of(ng.left.layer);
            w.y_slot = slot_of(ng.right.layer);
            w.x_index = ng.left.gate;
            w.y_index = ng.right.gate;
            plan.wires.push_back(std::move(w));
        }
    }
    return plan;
}

/// Per-wire weight under a combined claim: sum_t w_t * chi_gate(point_t),
/// shared by all nested gates of one accumulation gate.
inline void fill_wire_weights(const circuit::GeneralCircuit& c, std::size_t consumer,
                              const LayerClaim& claim, LayerPlan& plan,
                              const FieldConfigPtr& cfg) {
    std::size_t wi = 0;
    const auto& gates = c.gates(consumer);
    for (std::size_t gi = 0; gi < gates.size(); ++gi) {
        FieldElement w = FieldElement::zero(cfg);
        for (const auto& t : claim.terms) {
            w += t.weight * chi_eval(gi, std::span<const FieldElement>(t.point), cfg);
        }
        for (std::size_t k = 0; k < gates[gi].nested.size(); ++k) {
            plan.wires.at(wi++).weight = w;
        }
    }
    if (wi != plan.wires.size()) {
        throw std::logic_error("wire count mismatch while weighting");
    }
}

/// A slot claim over the common padded space shrinks to the source layer's
/// native variable count: zero padding multiplies the extension by
/// prod_{k >= native} (1 - u_k), which folds into the claim weight.
inline LayerClaim shrink_claim(std::size_t layer, std::size_t native_vars,
                               std::span<const FieldElement> point,
                               FieldElement value, const FieldConfigPtr& cfg) {
    FieldElement weight = FieldElement::one(cfg);
    const FieldElement one = FieldElement::one(cfg);
    for (std::size_t k = native_vars; k < point.size(); ++k) {
        weight *= one - point[k];
    }
    LayerClaim c;
    c.layer = layer;
    c.terms.push_back(ClaimTerm{
        std::vector<FieldElement>(
            point.begin(), point.begin() + static_cast<std::ptrdiff_t>(native_vars)),
        std::move(weight)});
    c.value = std::move(value);
    return c;
}

} // namespace detail

/// Reduces an output-table claim layer by layer down to input-layer claims.
/// The transcript absorbs the padded output table, a challenge point fixes
/// the initial claim, and each layer runs one two-phase sumcheck over its
/// source layers. Claims against earlier layers wait in a registry and are
/// folded when their layer is reached.
inline GkrProof gkr_prove(const circuit::GeneralCircuit& c,
                          std::span<const FieldElement> inputs,
                          const FieldConfigPtr& cfg, Transcript& transcript) {
    c.require_valid();
    auto values = c.evaluate(inputs, cfg);

    GkrProof proof;
    proof.claimed_outputs = values.back();
    for (const auto& v : proof.claimed_outputs) transcript.absorb(v);

    const std::size_t out_layer = c.output_layer();
    std::vector<FieldElement> q;
    for (std::size_t k = 0; k < c.padded_log2(out_layer); ++k) {
        q.push_back(transcript.challenge());
    }
    MultilinearTable out_table(cfg, c.padded_log2(out_layer), proof.claimed_outputs);
    FieldElement out_value = out_table.eval(q);

    std::vector<std::vector<LayerClaim>> registry(out_layer + 1);
    registry[out_layer].push_back(
        LayerClaim::simple(out_layer, std::move(q), std::move(out_value)));

    for (std::size_t layer = out_layer; layer >= 1; --layer) {
        GkrLayerProof lp;
        LayerClaim combined =
            combine_claims(std::move(registry[layer]), transcript, &lp.alphas);
        registry[layer].clear();

        detail::LayerPlan plan = detail::plan_layer(c, layer);
        detail::fill_wire_weights(c, layer, combined, plan, cfg);

        sumcheck::LayerInstance inst;
        inst.side_vars = plan.side_vars;
        inst.wires = plan.wires;
        for (std::size_t src : plan.slot_layers) {
            std::vector<FieldElement> padded = values[src];
            padded.resize(std::size_t{1} << plan.side_vars, FieldElement::zero(cfg));
            inst.slot_tables.emplace_back(cfg, plan.side_vars, std::move(padded));
        }

        sumcheck::LayerProveResult run =
            sumcheck::prove_layer_sum(inst, combined.value, transcript);

        const std::size_t n_slots = plan.slot_layers.size();
        for (std::size_t s = 0; s < n_slots; ++s) {
            const std::size_t src = plan.slot_layers[s];
            registry[src].push_back(detail::shrink_claim(
                src, c.padded_log2(src), run.x_point, run.proof.final_evals[s], cfg));
            registry[src].push_back(detail::shrink_claim(
                src, c.padded_log2(src), run.y_point,
                run.proof.final_evals[n_slots + s], cfg));
        }
        lp.sum = std::move(run.proof);
        proof.layers.push_back(std::move(lp));
    }

    for (std::size_t layer = 1; layer <= out_layer; ++layer) {
        if (!registry[layer].empty()) {
            throw std::logic_error("claim registry not fully consumed");
        }
    }
    return proof;
}

struct GkrVerifyResult {
    bool accept = false;
    /// Outstanding claims on the input layer for the caller to discharge
    /// (direct MLE check or a polynomial-commitment opening).
    std::vector<LayerClaim> input_claims;
};

inline GkrVerifyResult gkr_verify(const circuit::GeneralCircuit& c,
                                  std::span<const FieldElement> claimed_outputs,
                                  const GkrProof& proof,
                                  const FieldConfigPtr& cfg, Transcript& transcript) {
    GkrVerifyResult res;
    c.require_valid();
    const std::size_t out_layer = c.output_layer();
    if (proof.claimed_outputs.size() != c.padded_size(out_layer)) return res;
    // The statement being verified must match the proof's output table
    // (padding positions must be zero).
    for (std::size_t i = 0; i < proof.claimed_outputs.size(); ++i) {
        const FieldElement expect = i < claimed_outputs.size()
                                        ? claimed_outputs[i]
                                        : FieldElement::zero(cfg);
        if (proof.claimed_outputs[i] != expect) return res;
    }
    if (proof.layers.size() != out_layer) return res;

    for (const auto& v : proof.claimed_outputs) transcript.absorb(v);
    std::vector<FieldElement> q;
    for (std::size_t k = 0; k < c.padded_log2(out_layer); ++k) {
        q.push_back(transcript.challenge());
    }
    MultilinearTable out_table(cfg, c.padded_log2(out_layer), proof.claimed_outputs);
    FieldElement out_value = out_table.eval(q);

    std::vector<std::vector<LayerClaim>> registry(out_layer + 1);
    registry[out_layer].push_back(
        LayerClaim::simple(out_layer, std::move(q), std::move(out_value)));

    for (std::size_t layer = out_layer; layer >= 1; --layer) {
        const GkrLayerProof& lp = proof.layers[out_layer - layer];
        std::vector<FieldElement> alphas;
        LayerClaim combined =
            combine_claims(std::move(registry[layer]), transcript, &alphas);
        registry[layer].clear();
        if (alphas != lp.alphas) return res;

        detail::LayerPlan plan = detail::plan_layer(c, layer);
        detail::fill_wire_weights(c, layer, combined, plan, cfg);

        sumcheck::LayerVerifyResult lv = sumcheck::verify_layer_sum(
            combined.value, plan.side_vars, plan.slot_layers.size(),
            std::span<const sumcheck::LayerWire>(plan.wires), lp.sum, transcript);
        if (!lv.accept) return res;

        for (std::size_t s = 0; s < plan.slot_layers.size(); ++s) {
            const std::size_t src = plan.slot_layers[s];
            registry[src].push_back(detail::shrink_claim(
                src, c.padded_log2(src), lv.x_point, lv.x_slot_claims[s], cfg));
            registry[src].push_back(detail::shrink_claim(
                src, c.padded_log2(src), lv.y_point, lv.y_slot_claims[s], cfg));
        }
    }

    res.accept = true;
    res.input_claims = std::move(registry[0]);
    return res;
}

/// Discharges input-layer claims directly against the (padded) input table.
inline bool check_input_claims(std::span<const LayerClaim> claims,
                               const MultilinearTable& input_table) {
    const FieldConfigPtr& cfg = input_table.config();
    for (const auto& claim : claims) {
        FieldElement acc = FieldElement::zero(cfg);
        for (const auto& t : claim.terms) {
            acc += t.weight * input_table.eval(t.point);
        }
        if (acc != claim.value) return false;
    }
    return true;
}

} // namespace dgkr::gkr
