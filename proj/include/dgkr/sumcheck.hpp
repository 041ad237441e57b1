#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dgkr/counters.hpp"
#include "dgkr/field.hpp"
#include "dgkr/mle.hpp"
#include "dgkr/transcript.hpp"

namespace dgkr::sumcheck {

/// Univariate round message, transmitted as a fixed quadruple of
/// coefficients c0..c3. Honest product rounds are quadratic (c3 = 0); the
/// cap of 3 leaves room for cubic layer polynomials in the wire format.
struct RoundPolynomial {
    std::array<FieldElement, 4> coeffs;

    static RoundPolynomial quadratic(const FieldElement& c0,
                                     const FieldElement& c1,
                                     const FieldElement& c2) {
        FieldElement z = FieldElement::zero(c0.config());
        return RoundPolynomial{{c0, c1, c2, z}};
    }

    FieldElement eval(const FieldElement& x) const {
        // Horner
        return ((coeffs[3] * x + coeffs[2]) * x + coeffs[1]) * x + coeffs[0];
    }

    /// p(0) + p(1) = 2*c0 + c1 + c2 + c3.
    FieldElement sum01() const {
        return coeffs[0] + coeffs[0] + coeffs[1] + coeffs[2] + coeffs[3];
    }
};

struct ProductPair {
    MultilinearTable f;
    MultilinearTable g;
};

struct SumcheckProof {
    FieldElement claimed_sum;
    std::vector<RoundPolynomial> rounds;
    std::vector<FieldElement> final_evals;

    /// Wire format: claimed sum, round count, coefficient quadruples,
    /// final-evaluation count and values, all canonical field bytes.
    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out;
        claimed_sum.append_bytes(out);
        append_u32(out, static_cast<std::uint32_t>(rounds.size()));
        for (const auto& r : rounds) {
            for (const auto& c : r.coeffs) c.append_bytes(out);
        }
        append_u32(out, static_cast<std::uint32_t>(final_evals.size()));
        for (const auto& e : final_evals) e.append_bytes(out);
        return out;
    }

    static SumcheckProof from_bytes(std::span<const std::uint8_t> bytes,
                                    const FieldConfigPtr& cfg) {
        std::size_t pos = 0;
        auto take_field = [&]() {
            const std::size_t w = cfg->byte_width();
            if (pos + w > bytes.size()) {
                throw std::invalid_argument("truncated sumcheck proof");
            }
            auto e = FieldElement::from_bytes(bytes.subspan(pos, w), cfg);
            pos += w;
            return e;
        };
        auto take_u32 = [&]() {
            if (pos + 4 > bytes.size()) {
                throw std::invalid_argument("truncated sumcheck proof");
            }
            std::uint32_t v = 0;
            for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[pos + static_cast<std::size_t>(i)];
            pos += 4;
            return v;
        };
        SumcheckProof p;
        p.claimed_sum = take_field();
        const std::uint32_t n_rounds = take_u32();
        p.rounds.reserve(n_rounds);
        for (std::uint32_t i = 0; i < n_rounds; ++i) {
            RoundPolynomial r{{take_field(), take_field(), take_field(), take_field()}};
            p.rounds.push_back(std::move(r));
        }
        const std::uint32_t n_finals = take_u32();
        for (std::uint32_t i = 0; i < n_finals; ++i) {
            p.final_evals.push_back(take_field());
        }
        if (pos != bytes.size()) {
            throw std::invalid_argument("trailing bytes in sumcheck proof");
        }
        return p;
    }

private:
    static void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

namespace detail {

/// Mutable evaluation vectors for one product pair.
struct PairState {
    std::vector<FieldElement> f;
    std::vector<FieldElement> g;
};

/// Quadratic coefficients of sum_b prod-pair contributions for the current
/// variable: per slot, (f0 + df*X)(g0 + dg*X).
inline RoundPolynomial round_poly_over(std::span<const PairState> pairs,
                                       const FieldConfigPtr& cfg) {
    FieldElement c0 = FieldElement::zero(cfg);
    FieldElement c1 = FieldElement::zero(cfg);
    FieldElement c2 = FieldElement::zero(cfg);
    for (const auto& p : pairs) {
        const std::size_t half = p.f.size() / 2;
        for (std::size_t i = 0; i < half; ++i) {
            const FieldElement& f0 = p.f[2 * i];
            const FieldElement& g0 = p.g[2 * i];
            const FieldElement df = p.f[2 * i + 1] - f0;
            const FieldElement dg = p.g[2 * i + 1] - g0;
            c0 += f0 * g0;
            c1 += f0 * dg + g0 * df;
            c2 += df * dg;
        }
        ops::counters().table_touches += 4 * half;
    }
    return RoundPolynomial::quadratic(c0, c1, c2);
}

inline void fold_over(std::span<PairState> pairs, const FieldElement& r) {
    for (auto& p : pairs) {
        MultilinearTable::fold_once(p.f, r);
        MultilinearTable::fold_once(p.g, r);
    }
}

} // namespace detail

/// Linear-time prover state for sums of two-factor products of multilinear
/// polynomials over a shared variable set. The cluster runtime drives one
/// session per worker and one for the master tail, so the session exposes
/// each protocol step separately.
class PairSumSession {
public:
    explicit PairSumSession(std::span<const ProductPair> pairs) {
        if (pairs.empty()) {
            throw std::invalid_argument("product sum needs at least one pair");
        }
        cfg_ = pairs.front().f.config();
        vars_left_ = pairs.front().f.num_vars();
        for (const auto& p : pairs) {
            if (p.f.num_vars() != vars_left_ || p.g.num_vars() != vars_left_) {
                throw std::invalid_argument("mixed table sizes in product sum");
            }
            if (p.f.config()->modulus() != cfg_->modulus() ||
                p.g.config()->modulus() != cfg_->modulus()) {
                throw std::invalid_argument("mixed field configs in product sum");
            }
            states_.push_back(detail::PairState{p.f.evals(), p.g.evals()});
        }
    }

    const FieldConfigPtr& config() const { return cfg_; }
    std::size_t vars_left() const { return vars_left_; }
    std::size_t pair_count() const { return states_.size(); }

    /// sum_k sum_b f_k(b) * g_k(b) over the current tables.
    FieldElement total() const {
        FieldElement acc = FieldElement::zero(cfg_);
        for (const auto& p : states_) {
            for (std::size_t i = 0; i < p.f.size(); ++i) {
                acc += p.f[i] * p.g[i];
            }
            ops::counters().table_touches += 2 * p.f.size();
        }
        return acc;
    }

    RoundPolynomial round_poly() const {
        if (vars_left_ == 0) {
            throw std::logic_error("sumcheck session exhausted");
        }
        return detail::round_poly_over(states_, cfg_);
    }

    void fold(const FieldElement& r) {
        if (vars_left_ == 0) {
            throw std::logic_error("sumcheck session exhausted");
        }
        detail::fold_over(std::span<detail::PairState>(states_), r);
        --vars_left_;
    }

    /// After all folds: [f_0(r), g_0(r), f_1(r), g_1(r), ...].
    std::vector<FieldElement> final_values() const {
        if (vars_left_ != 0) {
            throw std::logic_error("sumcheck session still has unbound variables");
        }
        std::vector<FieldElement> out;
        out.reserve(2 * states_.size());
        for (const auto& p : states_) {
            out.push_back(p.f.front());
            out.push_back(p.g.front());
        }
        return out;
    }

private:
    FieldConfigPtr cfg_;
    std::size_t vars_left_ = 0;
    std::vector<detail::PairState> states_;
};

/// Proves claimed = sum_k sum_{x in {0,1}^l} f_k(x) * g_k(x).
/// Transcript order: claimed sum, then per round the coefficient quadruple,
/// then the round challenge.
inline SumcheckProof prove_product_sum(std::span<const ProductPair> pairs,
                                       Transcript& transcript) {
    PairSumSession session(pairs);
    SumcheckProof proof;
    proof.claimed_sum = session.total();
    transcript.absorb(proof.claimed_sum);
    const std::size_t l = session.vars_left();
    for (std::size_t j = 0; j < l; ++j) {
        RoundPolynomial rp = session.round_poly();
        for (const auto& c : rp.coeffs) transcript.absorb(c);
        proof.rounds.push_back(rp);
        session.fold(transcript.challenge());
    }
    proof.final_evals = session.final_values();
    return proof;
}

struct RoundsResult {
    bool ok = false;
    std::vector<FieldElement> point;
    FieldElement final_claim;
};

/// Shared verifier recursion: checks degree bounds and
/// g_j(0) + g_j(1) = previous claim, replaying the transcript.
inline RoundsResult run_round_checks(const FieldElement& claim,
                                     std::span<const RoundPolynomial> rounds,
                                     Transcript& transcript,
                                     bool require_quadratic = true) {
    RoundsResult res;
    res.final_claim = claim;
    for (const auto& rp : rounds) {
        if (require_quadratic && !rp.coeffs[3].is_zero()) {
            return res; // degree bound violated
        }
        if (rp.sum01() != res.final_claim) {
            return res;
        }
        for (const auto& c : rp.coeffs) transcript.absorb(c);
        FieldElement r = transcript.challenge();
        res.final_claim = rp.eval(r);
        res.point.push_back(std::move(r));
    }
    res.ok = true;
    return res;
}

struct ProductVerifyResult {
    bool accept = false;
    std::vector<FieldElement> final_point;
    /// Per-factor claimed evaluations at the final point, for downstream
    /// oracle checks: [f_0(r), g_0(r), f_1(r), g_1(r), ...].
    std::vector<FieldElement> factor_claims;
    FieldElement final_claim;
};

/// Rejection is a result, never an exception.
inline ProductVerifyResult verify_product_sum(const FieldElement& claim,
                                              const SumcheckProof& proof,
                                              Transcript& transcript) {
    ProductVerifyResult res;
    if (proof.claimed_sum != claim) return res;
    if (proof.final_evals.empty() || proof.final_evals.size() % 2 != 0) return res;
    transcript.absorb(claim);
    RoundsResult rounds = run_round_checks(claim, proof.rounds, transcript);
    res.final_point = rounds.point;
    res.final_claim = rounds.final_claim;
    if (!rounds.ok) return res;
    FieldElement expected = FieldElement::zero(claim.config());
    for (std::size_t k = 0; k + 1 < proof.final_evals.size(); k += 2) {
        expected += proof.final_evals[k] * proof.final_evals[k + 1];
    }
    if (expected != rounds.final_claim) return res;
    res.accept = true;
    res.factor_claims = proof.final_evals;
    return res;
}

/// One wire of a layer polynomial after the output variable has been bound:
/// weight carries the combined chi weight of the claim points at the wire's
/// output index. Slots name the source tables feeding x / y operands.
struct LayerWire {
    bool is_mul = false;
    FieldElement weight;
    std::uint32_t x_slot = 0;
    std::uint32_t y_slot = 0;
    std::uint64_t x_index = 0;
    std::uint64_t y_index = 0;
};

/// One layer-reduction instance: all slot tables are padded to a common
/// variable count so a single sumcheck covers wires from several source
/// layers.
struct LayerInstance {
    std::size_t side_vars = 0;
    std::vector<MultilinearTable> slot_tables;
    std::vector<LayerWire> wires;
};

struct LayerProveResult {
    SumcheckProof proof;
    std::vector<FieldElement> x_point;
    std::vector<FieldElement> y_point;
};

/*
 * Two-phase layer sumcheck over F(x, y) =
 *   sum_{mul wires} w * [x = xw][y = yw] * V_xs(x) * V_ys(y)
 * + sum_{add wires} w * [x = xw][y = yw] * (V_xs(x) + V_ys(y)).
 *
 * Phase 1 binds x: F1(x) = sum_s V_s(x) * H_s(x) + G(x), where H and G are
 * bookkeeping tables built in one pass over the wires. Phase 2 binds y the
 * same way using the phase-1 evaluations V_s(u). The proof records 2*s
 * quadratic rounds; final_evals holds the per-slot claims
 * [V_0(u), ..., V_{m-1}(u), V_0(v), ..., V_{m-1}(v)].
 */
inline LayerProveResult prove_layer_sum(const LayerInstance& inst,
                                        const FieldElement& claimed,
                                        Transcript& transcript) {
    const FieldConfigPtr& cfg = claimed.config();
    const std::size_t s = inst.side_vars;
    const std::size_t n_slots = inst.slot_tables.size();
    const std::size_t table_size = std::size_t{1} << s;
    for (const auto& t : inst.slot_tables) {
        if (t.num_vars() != s) {
            throw std::invalid_argument("slot table not padded to side_vars");
        }
    }
    for (const auto& w : inst.wires) {
        if (w.x_slot >= n_slots || w.y_slot >= n_slots ||
            w.x_index >= table_size || w.y_index >= table_size) {
            throw std::invalid_argument("layer wire index out of range");
        }
    }

    LayerProveResult res;
    SumcheckProof& proof = res.proof;
    proof.claimed_sum = claimed;
    transcript.absorb(claimed);

    const FieldElement zero = FieldElement::zero(cfg);

    // Phase 1 bookkeeping.
    std::vector<detail::PairState> pairs;
    {
        std::vector<std::vector<FieldElement>> h(
            n_slots, std::vector<FieldElement>(table_size, zero));
        std::vector<FieldElement> g(table_size, zero);
        for (const auto& w : inst.wires) {
            const FieldElement& vy = inst.slot_tables[w.y_slot][w.y_index];
            if (w.is_mul) {
                h[w.x_slot][w.x_index] += w.weight * vy;
            } else {
                h[w.x_slot][w.x_index] += w.weight;
                g[w.x_index] += w.weight * vy;
            }
            ops::counters().table_touches += 2;
        }
        for (std::size_t m = 0; m < n_slots; ++m) {
            pairs.push_back(detail::PairState{inst.slot_tables[m].evals(),
                                              std::move(h[m])});
        }
        pairs.push_back(detail::PairState{
            std::move(g),
            std::vector<FieldElement>(table_size, FieldElement::one(cfg))});
    }

    std::vector<FieldElement> u;
    for (std::size_t j = 0; j < s; ++j) {
        RoundPolynomial rp = detail::round_poly_over(pairs, cfg);
        for (const auto& c : rp.coeffs) transcript.absorb(c);
        proof.rounds.push_back(rp);
        FieldElement r = transcript.challenge();
        detail::fold_over(std::span<detail::PairState>(pairs), r);
        u.push_back(std::move(r));
    }
    std::vector<FieldElement> v_x;
    for (std::size_t m = 0; m < n_slots; ++m) {
        v_x.push_back(pairs[m].f.front());
    }

    // Phase 2 bookkeeping from the bound x point.
    pairs.clear();
    {
        std::vector<std::vector<FieldElement>> ma(
            n_slots, std::vector<FieldElement>(table_size, zero));
        std::vector<FieldElement> c(table_size, zero);
        for (const auto& w : inst.wires) {
            const FieldElement cx =
                w.weight * chi_eval(w.x_index, std::span<const FieldElement>(u), cfg);
            if (w.is_mul) {
                ma[w.y_slot][w.y_index] += cx * v_x[w.x_slot];
            } else {
                ma[w.y_slot][w.y_index] += cx;
                c[w.y_index] += cx * v_x[w.x_slot];
            }
            ops::counters().table_touches += 2;
        }
        for (std::size_t m = 0; m < n_slots; ++m) {
            pairs.push_back(detail::PairState{inst.slot_tables[m].evals(),
                                              std::move(ma[m])});
        }
        pairs.push_back(detail::PairState{
            std::move(c),
            std::vector<FieldElement>(table_size, FieldElement::one(cfg))});
    }

    for (std::size_t j = 0; j < s; ++j) {
        RoundPolynomial rp = detail::round_poly_over(pairs, cfg);
        for (const auto& c : rp.coeffs) transcript.absorb(c);
        proof.rounds.push_back(rp);
        FieldElement r = transcript.challenge();
        detail::fold_over(std::span<detail::PairState>(pairs), r);
        res.y_point.push_back(std::move(r));
    }

    proof.final_evals = std::move(v_x);
    for (std::size_t m = 0; m < n_slots; ++m) {
        proof.final_evals.push_back(pairs[m].f.front());
    }
    res.x_point = std::move(u);
    return res;
}

struct LayerVerifyResult {
    bool accept = false;
    std::vector<FieldElement> x_point;
    std::vector<FieldElement> y_point;
    std::vector<FieldElement> x_slot_claims;
    std::vector<FieldElement> y_slot_claims;
};

/// Verifies a layer sumcheck against the sparse wire list; the final
/// evaluation is recomputed from the wires at the bound points, so no dense
/// source table is ever consulted.
inline LayerVerifyResult verify_layer_sum(const FieldElement& claimed,
                                          std::size_t side_vars,
                                          std::size_t n_slots,
                                          std::span<const LayerWire> wires,
                                          const SumcheckProof& proof,
                                          Transcript& transcript) {
    LayerVerifyResult res;
    const FieldConfigPtr& cfg = claimed.config();
    if (proof.claimed_sum != claimed) return res;
    if (proof.rounds.size() != 2 * side_vars) return res;
    if (proof.final_evals.size() != 2 * n_slots) return res;
    transcript.absorb(claimed);
    RoundsResult rounds = run_round_checks(claimed, proof.rounds, transcript);
    if (!rounds.ok) return res;
    res.x_point.assign(rounds.point.begin(),
                       rounds.point.begin() + static_cast<std::ptrdiff_t>(side_vars));
    res.y_point.assign(rounds.point.begin() + static_cast<std::ptrdiff_t>(side_vars),
                       rounds.point.end());
    res.x_slot_claims.assign(proof.final_evals.begin(),
                             proof.final_evals.begin() + static_cast<std::ptrdiff_t>(n_slots));
    res.y_slot_claims.assign(proof.final_evals.begin() + static_cast<std::ptrdiff_t>(n_slots),
                             proof.final_evals.end());

    FieldElement expected = FieldElement::zero(cfg);
    for (const auto& w : wires) {
        if (w.x_slot >= n_slots || w.y_slot >= n_slots) return res;
        const FieldElement t =
            w.weight *
            chi_eval(w.x_index, std::span<const FieldElement>(res.x_point), cfg) *
            chi_eval(w.y_index, std::span<const FieldElement>(res.y_point), cfg);
        if (w.is_mul) {
            expected += t * res.x_slot_claims[w.x_slot] * res.y_slot_claims[w.y_slot];
        } else {
            expected += t * (res.x_slot_claims[w.x_slot] + res.y_slot_claims[w.y_slot]);
        }
    }
    if (expected != rounds.final_claim) return res;
    res.accept = true;
    return res;
}

} // namespace dgkr::sumcheck
