#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dgkr/pcs.hpp"
#include "oracles.hpp"

using namespace dgkr;
using pcs::Commitment;
using pcs::EvalMatrix;
using pcs::Opening;

namespace {

EvalMatrix random_matrix(std::size_t rows, std::size_t cols,
                         const FieldConfigPtr& cfg, std::mt19937_64& rng) {
    return EvalMatrix(cfg, rows, cols, oracles::random_evals(rows * cols, cfg, rng));
}

Transcript fresh_tr(const FieldConfigPtr& cfg) { return Transcript("test.pcs", cfg); }

} // namespace

TEST_CASE("commitment determinism and sensitivity") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        auto data = oracles::random_evals(4 * 8, bn, rng);
        EvalMatrix a(bn, 4, 8, data);
        EvalMatrix b(bn, 4, 8, data);
        CHECK(pcs::commit(a).root == pcs::commit(b).root);
        auto mutated = data;
        const std::size_t at = rng() % mutated.size();
        mutated[at] += FieldElement::one(bn);
        EvalMatrix m(bn, 4, 8, std::move(mutated));
        CHECK(pcs::commit(a).root != pcs::commit(m).root);
    }
}

TEST_CASE("smallest commitment: one row, one zero entry") {
    auto p97 = oracles::tiny97();
    EvalMatrix m(p97, 1, 1, {FieldElement::zero(p97)});
    auto com = pcs::commit(m);
    // Single column digest is the Merkle root itself.
    CHECK(com.root == m.column_digest(0));
    CHECK(com.to_bytes().size() == 32);
}

TEST_CASE("matrix shape guards") {
    auto p97 = oracles::tiny97();
    std::mt19937_64 rng(42);
    CHECK_THROWS_AS(EvalMatrix(p97, 2, 3, oracles::random_evals(6, p97, rng)),
                    std::invalid_argument);
    CHECK_THROWS_AS(EvalMatrix(p97, 2, 4, oracles::random_evals(7, p97, rng)),
                    std::invalid_argument);
}

TEST_CASE("open with a single row is the row MLE") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(43);
    auto m = random_matrix(1, 8, bn, rng);
    auto r = oracles::random_evals(3, bn, rng);
    auto tr = fresh_tr(bn);
    auto op = pcs::open(m, r, tr);
    auto row = m.row(0);
    CHECK(op.value ==
          oracles::naive_mle({row.begin(), row.end()}, r, bn));
}

TEST_CASE("open with two constant rows interpolates them") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(44);
    const FieldElement c0 = dgkr::random_element(bn, rng);
    const FieldElement c1 = dgkr::random_element(bn, rng);
    std::vector<FieldElement> data(8, c0);
    data.insert(data.end(), 8, c1);
    EvalMatrix m(bn, 2, 8, std::move(data));
    auto r = oracles::random_evals(4, bn, rng); // 3 row vars + 1 index var
    auto tr = fresh_tr(bn);
    auto op = pcs::open(m, r, tr);
    const FieldElement rho = r[3];
    CHECK(op.value == (FieldElement::one(bn) - rho) * c0 + rho * c1);
}

TEST_CASE("boolean point addresses one matrix entry") {
    auto p97 = oracles::tiny97();
    std::mt19937_64 rng(45);
    auto m = random_matrix(2, 4, p97, rng);
    for (std::uint64_t addr = 0; addr < 8; ++addr) {
        std::vector<FieldElement> r;
        for (int k = 0; k < 3; ++k) {
            r.push_back(FieldElement::from_u64(p97, (addr >> k) & 1));
        }
        auto tr = fresh_tr(p97);
        auto op = pcs::open(m, r, tr);
        CHECK(op.value == m.at(addr / 4, addr % 4));
    }
}

TEST_CASE("honest opening verifies; trivial tampering rejected") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(46);
    auto m = random_matrix(4, 16, bn, rng);
    auto com = pcs::commit(m);
    auto r = oracles::random_evals(6, bn, rng);
    auto tr = fresh_tr(bn);
    auto op = pcs::open(m, r, tr);
    {
        auto vtr = fresh_tr(bn);
        CHECK(pcs::verify_open(com, r, op, vtr, bn));
    }
    {
        auto bad = op;
        bad.value += FieldElement::one(bn);
        auto vtr = fresh_tr(bn);
        CHECK_FALSE(pcs::verify_open(com, r, bad, vtr, bn));
    }
    {
        auto bad = op;
        bad.spot_columns[0][0] += FieldElement::one(bn);
        auto vtr = fresh_tr(bn);
        CHECK_FALSE(pcs::verify_open(com, r, bad, vtr, bn));
    }
    {
        auto bad = op;
        bad.spot_paths[0][0][0] ^= 0x01;
        auto vtr = fresh_tr(bn);
        CHECK_FALSE(pcs::verify_open(com, r, bad, vtr, bn));
    }
}

TEST_CASE("correctness identity: opening equals the concatenated-table MLE") {
    auto bn = FieldConfig::bn254();
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = std::size_t{1} << (rng() % 3);
        const std::size_t cols = std::size_t{1} << (2 + rng() % 2);
        auto m = random_matrix(rows, cols, bn, rng);
        std::size_t vars = m.row_vars() + m.index_vars();
        auto r = oracles::random_evals(vars, bn, rng);
        auto tr = fresh_tr(bn);
        auto op = pcs::open(m, r, tr);
        std::vector<FieldElement> concat;
        for (std::size_t i = 0; i < rows; ++i) {
            auto row = m.row(i);
            concat.insert(concat.end(), row.begin(), row.end());
        }
        CHECK(op.value == oracles::naive_mle(concat, r, bn));
    }
}

/*
 * Adaptive forgery of one row evaluation: the attacker fixes the claimed
 * value to match the forged row claims and patches a single combined-row
 * position so the basis re-derivation still balances. The authenticated
 * spot columns catch the patched position with probability q / cols.
 */
TEST_CASE("forged row evaluation: rejection probability rises with q") {
    auto bn = FieldConfig::bn254();
    const std::size_t rows = 2, cols = 64;

    auto run_trials = [&](std::size_t q, int trials) {
        std::mt19937_64 rng(48);
        int rejected = 0;
        for (int t = 0; t < trials; ++t) {
            auto m = random_matrix(rows, cols, bn, rng);
            auto com = pcs::commit(m);
            auto r = oracles::random_evals(7, bn, rng); // 6 row vars + 1
            auto tr = fresh_tr(bn);
            auto op = pcs::open(m, r, tr, q);

            const FieldElement delta = dgkr::random_element(bn, rng);
            auto forged = op;
            forged.row_evals[0] += delta;
            const FieldElement beta0 =
                chi_eval(0, std::span<const FieldElement>(r).subspan(6), bn);
            forged.value += beta0 * delta;
            const std::size_t j0 = rng() % cols;
            const FieldElement chi_j0 =
                chi_eval(j0, std::span<const FieldElement>(r).subspan(0, 6), bn);
            forged.combined_row[j0] += beta0 * delta * chi_j0.inv();
            // Re-derive the spot set for the forged opening contents.
            {
                auto reopen_tr = fresh_tr(bn);
                forged.spot_indices = pcs::detail::derive_spot_indices(
                    reopen_tr, com.root, r, forged.value, forged.row_evals,
                    forged.combined_row, cols, q);
                forged.spot_columns.clear();
                forged.spot_paths.clear();
                std::vector<Digest> leaves;
                for (std::size_t j = 0; j < cols; ++j) {
                    leaves.push_back(m.column_digest(j));
                }
                MerkleTree tree(std::move(leaves));
                for (auto j : forged.spot_indices) {
                    forged.spot_columns.push_back(m.column(j));
                    forged.spot_paths.push_back(tree.path(j));
                }
            }
            auto vtr = fresh_tr(bn);
            if (!pcs::verify_open(com, r, forged, vtr, bn, q)) ++rejected;
        }
        return static_cast<double>(rejected) / trials;
    };

    const double rate_low = run_trials(8, 300);
    const double rate_mid = run_trials(32, 1000);
    const double rate_all = run_trials(64, 300);
    CHECK(rate_low < rate_mid);
    CHECK(rate_mid < rate_all);
    CHECK(rate_all == 1.0);              // all columns opened: always caught
    CHECK(rate_mid > 0.42);              // q/cols = 1/2 +- sampling noise
    CHECK(rate_mid < 0.58);
    CHECK(rate_low > 0.04);              // q/cols = 1/8 +- sampling noise
    CHECK(rate_low < 0.22);
}
