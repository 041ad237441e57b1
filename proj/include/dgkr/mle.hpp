#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dgkr/counters.hpp"
#include "dgkr/field.hpp"

namespace dgkr {

/// Evaluations of a multilinear polynomial on the boolean hypercube,
/// indexed by b = sum_k x_k * 2^(k-1) with x_1 the least significant bit.
/// The same structure serves as a sumcheck bookkeeping table.
class MultilinearTable {
public:
    MultilinearTable(FieldConfigPtr cfg, std::size_t num_vars,
                     std::vector<FieldElement> evals)
        : cfg_(std::move(cfg)), num_vars_(num_vars), evals_(std::move(evals)) {
        if (evals_.size() != (std::size_t{1} << num_vars_)) {
            throw std::invalid_argument("table size must be 2^num_vars");
        }
        for (const auto& e : evals_) {
            if (!e.config() || e.config()->modulus() != cfg_->modulus()) {
                throw std::invalid_argument("table elements must share one field config");
            }
        }
    }

    static MultilinearTable zeros(const FieldConfigPtr& cfg, std::size_t num_vars) {
        return constant(cfg, num_vars, FieldElement::zero(cfg));
    }

    static MultilinearTable constant(const FieldConfigPtr& cfg,
                                     std::size_t num_vars,
                                     const FieldElement& v) {
        return MultilinearTable(
            cfg, num_vars,
            std::vector<FieldElement>(std::size_t{1} << num_vars, v));
    }

    const FieldConfigPtr& config() const { return cfg_; }
    std::size_t num_vars() const { return num_vars_; }
    std::size_t size() const { return evals_.size(); }
    const std::vector<FieldElement>& evals() const { return evals_; }
    const FieldElement& operator[](std::size_t i) const { return evals_.at(i); }

    /// Multilinear extension evaluated at an arbitrary point, by folding one
    /// variable at a time (linear work in table size).
    FieldElement eval(std::span<const FieldElement> point) const {
        if (point.size() != num_vars_) {
            throw std::invalid_argument("evaluation point has wrong length");
        }
        ops::counters().dense_evals += 1;
        std::vector<FieldElement> tmp = evals_;
        for (const auto& r : point) {
            fold_once(tmp, r);
        }
        return tmp.front();
    }

    /// Binds x_1 := r, producing a table over the remaining l-1 variables:
    /// t'[b] = (1-r)*t[2b] + r*t[2b+1].
    MultilinearTable fix_first_variable(const FieldElement& r) const {
        if (num_vars_ == 0) {
            throw std::invalid_argument("no variable left to fix");
        }
        std::vector<FieldElement> next = evals_;
        fold_once(next, r);
        return MultilinearTable(cfg_, num_vars_ - 1, std::move(next));
    }

    /// In-place halving step shared by provers. Counts table touches.
    static void fold_once(std::vector<FieldElement>& t, const FieldElement& r) {
        const std::size_t half = t.size() / 2;
        if (half * 2 != t.size() || t.empty()) {
            throw std::invalid_argument("cannot fold table of odd size");
        }
        for (std::size_t i = 0; i < half; ++i) {
            t[i] = t[2 * i] + r * (t[2 * i + 1] - t[2 * i]);
        }
        t.resize(half);
        ops::counters().table_touches += 3 * half;
    }

private:
    FieldConfigPtr cfg_;
    std::size_t num_vars_;
    std::vector<FieldElement> evals_;
};

/// Identity polynomial: beta(x, y) = prod_i ((1-x_i)(1-y_i) + x_i*y_i).
/// Empty sequences give 1.
inline FieldElement beta_eval(std::span<const FieldElement> x,
                              std::span<const FieldElement> y,
                              const FieldConfigPtr& cfg) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("beta arguments must have equal length");
    }
    FieldElement acc = FieldElement::one(cfg);
    const FieldElement one = FieldElement::one(cfg);
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc *= (one - x[i]) * (one - y[i]) + x[i] * y[i];
    }
    return acc;
}

/// chi_b(point) = prod_k (b_k ? point_k : 1 - point_k), bits LSB-first.
/// Equals beta(point, bits(b)).
inline FieldElement chi_eval(std::uint64_t index,
                             std::span<const FieldElement> point,
                             const FieldConfigPtr& cfg) {
    FieldElement acc = FieldElement::one(cfg);
    const FieldElement one = FieldElement::one(cfg);
    for (std::size_t k = 0; k < point.size(); ++k) {
        acc *= ((index >> k) & 1) ? point[k] : one - point[k];
    }
    return acc;
}

} // namespace dgkr
