#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dgkr/field.hpp"
#include "dgkr/merkle.hpp"
#include "dgkr/mle.hpp"
#include "dgkr/sha256.hpp"
#include "dgkr/transcript.hpp"

namespace dgkr::pcs {

inline constexpr std::size_t kDefaultSpotChecks = 32;

/// Per-worker evaluation rows of one multilinear polynomial: row i holds
/// the evaluations of f^(i) on its hypercube, so the row-major concatenation
/// is the full table with the row index in the high variables.
class EvalMatrix {
public:
    EvalMatrix(FieldConfigPtr cfg, std::size_t rows, std::size_t cols,
               std::vector<FieldElement> data)
        : cfg_(std::move(cfg)), rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows_ == 0 || cols_ == 0 || (cols_ & (cols_ - 1)) != 0 ||
            (rows_ & (rows_ - 1)) != 0) {
            throw std::invalid_argument("matrix dimensions must be nonzero powers of two");
        }
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("ragged evaluation matrix");
        }
    }

    static EvalMatrix from_rows(const std::vector<MultilinearTable>& rows) {
        if (rows.empty()) {
            throw std::invalid_argument("matrix needs at least one row");
        }
        std::vector<FieldElement> data;
        const std::size_t cols = rows.front().size();
        for (const auto& r : rows) {
            if (r.size() != cols) {
                throw std::invalid_argument("ragged evaluation matrix");
            }
            data.insert(data.end(), r.evals().begin(), r.evals().end());
        }
        return EvalMatrix(rows.front().config(), rows.size(), cols, std::move(data));
    }

    const FieldConfigPtr& config() const { return cfg_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t row_vars() const { return circuit_log2(cols_); }
    std::size_t index_vars() const { return circuit_log2(rows_); }

    const FieldElement& at(std::size_t row, std::size_t col) const {
        return data_.at(row * cols_ + col);
    }

    std::span<const FieldElement> row(std::size_t i) const {
        return std::span<const FieldElement>(data_).subspan(i * cols_, cols_);
    }

    std::vector<FieldElement> column(std::size_t j) const {
        std::vector<FieldElement> out;
        out.reserve(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out.push_back(at(i, j));
        return out;
    }

    /// Digest of column j: SHA-256 over the canonical bytes of
    /// (row_0[j], ..., row_{M-1}[j]).
    Digest column_digest(std::size_t j) const {
        Sha256 h;
        for (std::size_t i = 0; i < rows_; ++i) {
            auto b = at(i, j).to_bytes();
            h.update(std::span<const std::uint8_t>(b.data(), b.size()));
        }
        return h.finalize();
    }

private:
    static std::size_t circuit_log2(std::size_t n) {
        std::size_t l = 0;
        while ((std::size_t{1} << l) < n) ++l;
        return l;
    }

    FieldConfigPtr cfg_;
    std::size_t rows_, cols_;
    std::vector<FieldElement> data_;
};

struct Commitment {
    Digest root{};
    std::size_t rows = 0;
    std::size_t cols = 0;

    /// Wire payload is the bare root.
    std::vector<std::uint8_t> to_bytes() const {
        return std::vector<std::uint8_t>(root.begin(), root.end());
    }
};

inline Commitment commit(const EvalMatrix& m) {
    std::vector<Digest> leaves;
    leaves.reserve(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) {
        leaves.push_back(m.column_digest(j));
    }
    MerkleTree tree(std::move(leaves));
    return Commitment{tree.root(), m.rows(), m.cols()};
}

/*
 * Opening of the committed polynomial at r = (r_low, r_high):
 *   value     = sum_i beta(r_high, bits(i)) * f^(i)(r_low)
 *   row_evals = the per-row evaluations f^(i)(r_low)
 *   combined_row[j] = sum_i beta(r_high, bits(i)) * row_i[j], the beta
 *                     combination of each column, included so the verifier
 *                     can re-derive the claimed evaluation from authenticated
 *                     columns with the multilinear basis weights
 *   spot checks: q transcript-chosen column indices with full columns and
 *                Merkle authentication paths.
 */
struct Opening {
    std::vector<FieldElement> point;
    FieldElement value;
    std::vector<FieldElement> row_evals;
    std::vector<FieldElement> combined_row;
    std::vector<std::uint64_t> spot_indices;
    std::vector<std::vector<FieldElement>> spot_columns;
    std::vector<std::vector<Digest>> spot_paths;

    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out;
        auto put32 = [&](std::uint32_t v) {
            for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        };
        put32(static_cast<std::uint32_t>(point.size()));
        for (const auto& e : point) e.append_bytes(out);
        value.append_bytes(out);
        put32(static_cast<std::uint32_t>(row_evals.size()));
        for (const auto& e : row_evals) e.append_bytes(out);
        put32(static_cast<std::uint32_t>(combined_row.size()));
        for (const auto& e : combined_row) e.append_bytes(out);
        put32(static_cast<std::uint32_t>(spot_indices.size()));
        for (std::size_t k = 0; k < spot_indices.size(); ++k) {
            put32(static_cast<std::uint32_t>(spot_indices[k]));
            for (const auto& e : spot_columns[k]) e.append_bytes(out);
            for (const auto& d : spot_paths[k]) {
                out.insert(out.end(), d.begin(), d.end());
            }
        }
        return out;
    }
};

namespace detail {

inline std::vector<FieldElement> beta_weights(std::span<const FieldElement> r_high,
                                              std::size_t rows,
                                              const FieldConfigPtr& cfg) {
    std::vector<FieldElement> w;
    w.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        w.push_back(chi_eval(i, r_high, cfg));
    }
    return w;
}

inline std::vector<FieldElement> chi_weights(std::span<const FieldElement> r_low,
                                             std::size_t cols,
                                             const FieldConfigPtr& cfg) {
    std::vector<FieldElement> w;
    w.reserve(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        w.push_back(chi_eval(j, r_low, cfg));
    }
    return w;
}

/// Transcript binding for spot-check selection: root, point, claimed value,
/// row evaluations and the combined row, then q distinct column draws.
inline std::vector<std::uint64_t> derive_spot_indices(
    Transcript& transcript, const Digest& root, std::span<const FieldElement> r,
    const FieldElement& value, std::span<const FieldElement> row_evals,
    std::span<const FieldElement> combined_row, std::size_t cols, std::size_t q) {
    transcript.absorb(std::span<const std::uint8_t>(root.data(), root.size()));
    for (const auto& e : r) transcript.absorb(e);
    transcript.absorb(value);
    for (const auto& e : row_evals) transcript.absorb(e);
    for (const auto& e : combined_row) transcript.absorb(e);
    std::vector<std::uint64_t> indices;
    if (q >= cols) {
        for (std::uint64_t j = 0; j < cols; ++j) indices.push_back(j);
        return indices;
    }
    std::vector<bool> seen(cols, false);
    while (indices.size() < q) {
        const std::uint64_t j = transcript.challenge_index(cols);
        if (!seen[j]) {
            seen[j] = true;
            indices.push_back(j);
        }
    }
    return indices;
}

} // namespace detail

inline Opening open(const EvalMatrix& m, std::span<const FieldElement> r,
                    Transcript& transcript, std::size_t spot_checks = kDefaultSpotChecks) {
    const FieldConfigPtr& cfg = m.config();
    if (r.size() != m.row_vars() + m.index_vars()) {
        throw std::invalid_argument("opening point has wrong dimension");
    }
    const auto r_low = r.subspan(0, m.row_vars());
    const auto r_high = r.subspan(m.row_vars());

    Opening op;
    op.point.assign(r.begin(), r.end());
    const auto beta = detail::beta_weights(r_high, m.rows(), cfg);

    op.value = FieldElement::zero(cfg);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        MultilinearTable t(cfg, m.row_vars(),
                           std::vector<FieldElement>(row.begin(), row.end()));
        op.row_evals.push_back(t.eval(r_low));
        op.value += beta[i] * op.row_evals.back();
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
        FieldElement acc = FieldElement::zero(cfg);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            acc += beta[i] * m.at(i, j);
        }
        op.combined_row.push_back(std::move(acc));
    }

    std::vector<Digest> leaves;
    leaves.reserve(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) leaves.push_back(m.column_digest(j));
    MerkleTree tree(std::move(leaves));

    op.spot_indices = detail::derive_spot_indices(
        transcript, tree.root(), r, op.value, op.row_evals, op.combined_row,
        m.cols(), spot_checks);
    for (std::uint64_t j : op.spot_indices) {
        op.spot_columns.push_back(m.column(j));
        op.spot_paths.push_back(tree.path(j));
    }
    return op;
}

inline bool verify_open(const Commitment& com, std::span<const FieldElement> r,
                        const Opening& opening, Transcript& transcript,
                        const FieldConfigPtr& cfg,
                        std::size_t spot_checks = kDefaultSpotChecks) {
    const std::size_t rows = com.rows;
    const std::size_t cols = com.cols;
    if (opening.row_evals.size() != rows) return false;
    if (opening.combined_row.size() != cols) return false;
    if (opening.point.size() != r.size()) return false;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (opening.point[i] != r[i]) return false;
    }
    std::size_t row_vars = 0, index_vars = 0;
    while ((std::size_t{1} << row_vars) < cols) ++row_vars;
    while ((std::size_t{1} << index_vars) < rows) ++index_vars;
    if (r.size() != row_vars + index_vars) return false;
    const auto r_low = r.subspan(0, row_vars);
    const auto r_high = r.subspan(row_vars);
    const auto beta = detail::beta_weights(r_high, rows, cfg);

    // (c) beta combination of the per-row claims matches the claimed value.
    FieldElement from_rows = FieldElement::zero(cfg);
    for (std::size_t i = 0; i < rows; ++i) {
        from_rows += beta[i] * opening.row_evals[i];
    }
    if (from_rows != opening.value) return false;

    // (b) the combined row re-derives the claimed evaluation with the
    // multilinear basis weights.
    const auto chi = detail::chi_weights(r_low, cols, cfg);
    FieldElement from_cols = FieldElement::zero(cfg);
    for (std::size_t j = 0; j < cols; ++j) {
        from_cols += opening.combined_row[j] * chi[j];
    }
    if (from_cols != opening.value) return false;

    // (a) spot columns: transcript-bound selection, Merkle paths against the
    // root, and per-column consistency with the combined row.
    const auto expect_indices = detail::derive_spot_indices(
        transcript, com.root, r, opening.value, opening.row_evals,
        opening.combined_row, cols, spot_checks);
    if (expect_indices != opening.spot_indices) return false;
    if (opening.spot_columns.size() != expect_indices.size() ||
        opening.spot_paths.size() != expect_indices.size()) {
        return false;
    }
    for (std::size_t k = 0; k < expect_indices.size(); ++k) {
        const std::uint64_t j = expect_indices[k];
        const auto& col = opening.spot_columns[k];
        if (col.size() != rows) return false;
        Sha256 h;
        for (const auto& e : col) {
            auto b = e.to_bytes();
            h.update(std::span<const std::uint8_t>(b.data(), b.size()));
        }
        if (!MerkleTree::verify_path(com.root, h.finalize(), j,
                                     opening.spot_paths[k])) {
            return false;
        }
        FieldElement acc = FieldElement::zero(cfg);
        for (std::size_t i = 0; i < rows; ++i) {
            acc += beta[i] * col[i];
        }
        if (acc != opening.combined_row[j]) return false;
    }
    return true;
}

} // namespace dgkr::pcs
