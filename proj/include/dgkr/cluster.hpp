#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgkr/field.hpp"
#include "dgkr/mle.hpp"
#include "dgkr/pcs.hpp"
#include "dgkr/sumcheck.hpp"
#include "dgkr/transcript.hpp"

namespace dgkr::cluster {

/// N workers split into K clusters of M = N/K; worker 0 is the master and
/// the first worker of each cluster is its leader.
struct ClusterTopology {
    std::size_t n_workers = 1;
    std::size_t n_clusters = 1;
    std::size_t cluster_size = 1;
    std::size_t master = 0;

    std::size_t leader_of(std::size_t cluster) const { return cluster * cluster_size; }
    std::size_t cluster_of(std::size_t worker) const { return worker / cluster_size; }
    std::size_t member_of(std::size_t worker) const { return worker % cluster_size; }

    /// N must be a nonzero power of two. When K is unset, picks the smallest
    /// power of two >= log2(N), clamped to [1, N]; that lands in the
    /// recommended band [log2 N, sqrt N] whenever the band contains a power
    /// of two.
    static ClusterTopology plan(std::size_t n_workers,
                                std::optional<std::size_t> k = std::nullopt) {
        if (n_workers == 0 || (n_workers & (n_workers - 1)) != 0) {
            throw std::invalid_argument("worker count must be a nonzero power of two");
        }
        std::size_t clusters;
        if (k) {
            clusters = *k;
            if (clusters == 0 || clusters > n_workers || n_workers % clusters != 0) {
                throw std::invalid_argument("cluster count must divide worker count");
            }
        } else {
            std::size_t log2n = 0;
            while ((std::size_t{1} << log2n) < n_workers) ++log2n;
            clusters = 1;
            while (clusters < log2n) clusters <<= 1;
            if (clusters > n_workers) clusters = n_workers;
        }
        return ClusterTopology{n_workers, clusters, n_workers / clusters, 0};
    }
};

struct PhaseTraffic {
    std::uint64_t w2w = 0;
    std::uint64_t w2m = 0;
    std::uint64_t m2w = 0;
    std::uint64_t mempool = 0;
};

/// Byte-accurate accounting of every message and mempool write, with a
/// per-phase breakdown. Self-delivery (sender == receiver) moves no bytes.
class TrafficStats {
public:
    void begin_phase(std::string name) { phase_ = std::move(name); }

    void record_message(std::size_t from, std::size_t to, std::size_t master,
                        std::size_t bytes) {
        if (from == to) return;
        PhaseTraffic& p = phases_[phase_];
        if (to == master) {
            total_.w2m += bytes;
            p.w2m += bytes;
        } else if (from == master) {
            total_.m2w += bytes;
            p.m2w += bytes;
        } else {
            total_.w2w += bytes;
            p.w2w += bytes;
        }
    }

    void record_mempool_write(std::size_t bytes) {
        total_.mempool += bytes;
        phases_[phase_].mempool += bytes;
    }

    const PhaseTraffic& total() const { return total_; }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["w2w"] = total_.w2w;
        j["w2m"] = total_.w2m;
        j["m2w"] = total_.m2w;
        j["mempool"] = total_.mempool;
        nlohmann::ordered_json phases;
        for (const auto& [name, p] : phases_) {
            phases[name] = {{"w2w", p.w2w}, {"w2m", p.w2m}, {"m2w", p.m2w},
                            {"mempool", p.mempool}};
        }
        j["phases"] = phases;
        return j;
    }

private:
    PhaseTraffic total_;
    std::map<std::string, PhaseTraffic> phases_;
    std::string phase_ = "setup";
};

/// Shared array with one disjoint region per cluster member. Writers stay
/// inside their region and raise a completion flag once per phase; the
/// leader may read only after every flag is up.
class SharedMempool {
public:
    SharedMempool(std::size_t members, std::size_t region_size)
        : region_size_(region_size), data_(members * region_size, 0),
          complete_(members, false) {}

    std::size_t region_size() const { return region_size_; }
    std::size_t members() const { return complete_.size(); }

    /// Absolute offsets; the write must land inside the member's region.
    void write(std::size_t member, std::size_t offset,
               std::span<const std::uint8_t> bytes, TrafficStats& stats) {
        if (member >= complete_.size()) {
            throw std::invalid_argument("unknown mempool member");
        }
        const std::size_t lo = member * region_size_;
        const std::size_t hi = lo + region_size_;
        if (offset < lo || offset + bytes.size() > hi) {
            throw std::invalid_argument("mempool region violation");
        }
        std::copy(bytes.begin(), bytes.end(),
                  data_.begin() + static_cast<std::ptrdiff_t>(offset));
        stats.record_mempool_write(bytes.size());
    }

    void mark_complete(std::size_t member) {
        if (complete_.at(member)) {
            throw std::logic_error("mempool region completed twice");
        }
        complete_[member] = true;
    }

    bool all_complete() const {
        for (bool f : complete_) {
            if (!f) return false;
        }
        return true;
    }

    /// Leader-side read, gated on the completion barrier.
    std::span<const std::uint8_t> read_region(std::size_t member) const {
        if (!all_complete()) {
            throw std::logic_error("mempool read before completion barrier");
        }
        return std::span<const std::uint8_t>(data_).subspan(member * region_size_,
                                                            region_size_);
    }

    void reset_phase() { complete_.assign(complete_.size(), false); }

    /// Test hook: simulates an out-of-band fault, bypassing region checks.
    void fault_inject(std::size_t offset, std::span<const std::uint8_t> bytes) {
        std::copy(bytes.begin(), bytes.end(),
                  data_.begin() + static_cast<std::ptrdiff_t>(offset));
    }

private:
    std::size_t region_size_;
    std::vector<std::uint8_t> data_;
    std::vector<bool> complete_;
};

/// Worker i's slice of every product pair: f_k^(i)(x) = f_k(x, bits(i)),
/// i.e. the worker index occupies the high variables.
struct WorkerShare {
    std::size_t index = 0;
    std::vector<sumcheck::ProductPair> pairs;
};

/// Splits full product pairs into N worker shares (row-major chunks).
inline std::vector<WorkerShare> shard_pairs(
    std::span<const sumcheck::ProductPair> pairs, std::size_t n_workers) {
    if (pairs.empty()) {
        throw std::invalid_argument("nothing to shard");
    }
    const std::size_t total = pairs.front().f.size();
    if (n_workers == 0 || total % n_workers != 0) {
        throw std::invalid_argument("worker count must divide table size");
    }
    const std::size_t chunk = total / n_workers;
    const FieldConfigPtr& cfg = pairs.front().f.config();
    std::size_t vars = 0;
    while ((std::size_t{1} << vars) < chunk) ++vars;
    std::vector<WorkerShare> shares(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) {
        shares[i].index = i;
        for (const auto& p : pairs) {
            auto slice = [&](const MultilinearTable& t) {
                std::vector<FieldElement> v(
                    t.evals().begin() + static_cast<std::ptrdiff_t>(i * chunk),
                    t.evals().begin() + static_cast<std::ptrdiff_t>((i + 1) * chunk));
                return MultilinearTable(cfg, vars, std::move(v));
            };
            shares[i].pairs.push_back(sumcheck::ProductPair{slice(p.f), slice(p.g)});
        }
    }
    return shares;
}

/*
 * Distributed product sumcheck. For the first l-n rounds every worker sends
 * its local round quadruple to the master, the master absorbs the
 * coefficient sums into the transcript and relays each challenge back. At
 * the boundary the workers ship their bookkeeping-table remainders (one
 * value per factor) and the master rebuilds N-sized tables and finishes the
 * remaining n rounds alone. The resulting proof and transcript are
 * byte-identical to a single-machine run over the concatenated tables.
 */
inline sumcheck::SumcheckProof dist_sumcheck(const ClusterTopology& topo,
                                             std::span<const WorkerShare> shares,
                                             Transcript& transcript,
                                             TrafficStats& stats) {
    if (shares.size() != topo.n_workers) {
        throw std::invalid_argument("share count must match topology");
    }
    const std::size_t n_pairs = shares.front().pairs.size();
    const std::size_t local_vars = shares.front().pairs.front().f.num_vars();
    for (const auto& s : shares) {
        if (s.pairs.size() != n_pairs) {
            throw std::invalid_argument("inconsistent share dimensions");
        }
        for (const auto& p : s.pairs) {
            if (p.f.num_vars() != local_vars || p.g.num_vars() != local_vars) {
                throw std::invalid_argument("inconsistent share dimensions");
            }
        }
    }
    const FieldConfigPtr cfg = shares.front().pairs.front().f.config();
    const std::size_t width = cfg->byte_width();

    std::vector<sumcheck::PairSumSession> sessions;
    sessions.reserve(topo.n_workers);
    for (const auto& s : shares) {
        sessions.emplace_back(std::span<const sumcheck::ProductPair>(s.pairs));
    }

    sumcheck::SumcheckProof proof;

    // Claimed sum: every worker reports its local total.
    FieldElement claimed = FieldElement::zero(cfg);
    for (std::size_t i = 0; i < topo.n_workers; ++i) {
        stats.record_message(i, topo.master, topo.master, width);
        claimed += sessions[i].total();
    }
    proof.claimed_sum = claimed;
    transcript.absorb(claimed);

    // Shared rounds over the low variables.
    for (std::size_t j = 0; j < local_vars; ++j) {
        FieldElement c0 = FieldElement::zero(cfg);
        FieldElement c1 = FieldElement::zero(cfg);
        FieldElement c2 = FieldElement::zero(cfg);
        for (std::size_t i = 0; i < topo.n_workers; ++i) {
            sumcheck::RoundPolynomial local = sessions[i].round_poly();
            stats.record_message(i, topo.master, topo.master, 4 * width);
            c0 += local.coeffs[0];
            c1 += local.coeffs[1];
            c2 += local.coeffs[2];
        }
        sumcheck::RoundPolynomial rp = sumcheck::RoundPolynomial::quadratic(c0, c1, c2);
        for (const auto& c : rp.coeffs) transcript.absorb(c);
        proof.rounds.push_back(rp);
        FieldElement r = transcript.challenge();
        for (std::size_t i = 0; i < topo.n_workers; ++i) {
            stats.record_message(topo.master, i, topo.master, width);
            sessions[i].fold(r);
        }
    }

    // Boundary: workers ship final bookkeeping values; the master rebuilds
    // per-factor tables of size N and runs the remaining rounds.
    std::size_t index_vars = 0;
    while ((std::size_t{1} << index_vars) < topo.n_workers) ++index_vars;
    std::vector<std::vector<FieldElement>> finals;
    finals.reserve(topo.n_workers);
    for (std::size_t i = 0; i < topo.n_workers; ++i) {
        stats.record_message(i, topo.master, topo.master, 2 * n_pairs * width);
        finals.push_back(sessions[i].final_values());
    }
    std::vector<sumcheck::ProductPair> master_pairs;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        std::vector<FieldElement> f, g;
        for (std::size_t i = 0; i < topo.n_workers; ++i) {
            f.push_back(finals[i][2 * k]);
            g.push_back(finals[i][2 * k + 1]);
        }
        master_pairs.push_back(sumcheck::ProductPair{
            MultilinearTable(cfg, index_vars, std::move(f)),
            MultilinearTable(cfg, index_vars, std::move(g))});
    }
    sumcheck::PairSumSession master{
        std::span<const sumcheck::ProductPair>(master_pairs)};
    for (std::size_t j = 0; j < index_vars; ++j) {
        sumcheck::RoundPolynomial rp = master.round_poly();
        for (const auto& c : rp.coeffs) transcript.absorb(c);
        proof.rounds.push_back(rp);
        master.fold(transcript.challenge());
    }
    proof.final_evals = master.final_values();
    return proof;
}

/// Distributed commitment and opening over per-worker evaluation rows.
/// Workers publish rows through their cluster's shared mempool only; each
/// leader assembles its matrix behind the completion barrier and talks to
/// the master. No worker-to-worker channel exists.
class DistPc {
public:
    DistPc(ClusterTopology topo, FieldConfigPtr cfg)
        : topo_(std::move(topo)), cfg_(std::move(cfg)) {}

    using FaultHook = std::function<void(std::vector<SharedMempool>&)>;

    /// Each worker writes its row into its mempool region; leaders commit
    /// per cluster. The optional hook runs after the writes and before
    /// leader assembly (fault-injection tests).
    std::vector<pcs::Commitment> commit(std::span<const MultilinearTable> rows,
                                        TrafficStats& stats,
                                        const FaultHook& post_write = {}) {
        if (rows.size() != topo_.n_workers) {
            throw std::invalid_argument("row count must match topology");
        }
        row_vars_ = rows.front().num_vars();
        const std::size_t row_bytes =
            (std::size_t{1} << row_vars_) * cfg_->byte_width();
        pools_.clear();
        for (std::size_t c = 0; c < topo_.n_clusters; ++c) {
            pools_.emplace_back(topo_.cluster_size, row_bytes);
        }
        for (std::size_t i = 0; i < topo_.n_workers; ++i) {
            if (rows[i].num_vars() != row_vars_) {
                throw std::invalid_argument("ragged worker rows");
            }
            std::vector<std::uint8_t> bytes;
            bytes.reserve(row_bytes);
            for (const auto& e : rows[i].evals()) e.append_bytes(bytes);
            const std::size_t member = topo_.member_of(i);
            pools_[topo_.cluster_of(i)].write(
                member, member * row_bytes,
                std::span<const std::uint8_t>(bytes.data(), bytes.size()), stats);
            pools_[topo_.cluster_of(i)].mark_complete(member);
        }
        if (post_write) post_write(pools_);

        matrices_.clear();
        commitments_.clear();
        for (std::size_t c = 0; c < topo_.n_clusters; ++c) {
            matrices_.push_back(assemble(c));
            commitments_.push_back(pcs::commit(matrices_.back()));
            stats.record_message(topo_.leader_of(c), topo_.master, topo_.master,
                                 commitments_.back().to_bytes().size());
        }
        return commitments_;
    }

    struct DistOpening {
        std::vector<pcs::Opening> cluster_openings;
        FieldElement combined_value;
    };

    /*
     * Opens the committed polynomial at r = (r_low | r_mid | r_top): r_low
     * addresses within a row, r_mid the member within a cluster, r_top the
     * cluster. Each leader produces a cluster opening at (r_low | r_mid);
     * the master combines the cluster values with beta(r_top, bits(c)).
     */
    DistOpening open(std::span<const FieldElement> r, TrafficStats& stats,
                     std::size_t spot_checks = pcs::kDefaultSpotChecks) const {
        if (matrices_.empty()) {
            throw std::logic_error("open before commit");
        }
        std::size_t member_vars = 0, cluster_vars = 0;
        while ((std::size_t{1} << member_vars) < topo_.cluster_size) ++member_vars;
        while ((std::size_t{1} << cluster_vars) < topo_.n_clusters) ++cluster_vars;
        if (r.size() != row_vars_ + member_vars + cluster_vars) {
            throw std::invalid_argument("opening point has wrong dimension");
        }
        const auto r_cluster_local = r.subspan(0, row_vars_ + member_vars);
        const auto r_top = r.subspan(row_vars_ + member_vars);

        DistOpening out;
        out.combined_value = FieldElement::zero(cfg_);
        for (std::size_t c = 0; c < topo_.n_clusters; ++c) {
            Transcript tr = opening_transcript(c);
            pcs::Opening op =
                pcs::open(matrices_[c], r_cluster_local, tr, spot_checks);
            stats.record_message(topo_.leader_of(c), topo_.master, topo_.master,
                                 op.to_bytes().size());
            out.combined_value += chi_eval(c, r_top, cfg_) * op.value;
            out.cluster_openings.push_back(std::move(op));
        }
        return out;
    }

    /// Master-side verification of a distributed opening against the K
    /// cluster roots; recomputes the beta-weighted combination.
    bool verify(std::span<const pcs::Commitment> commitments,
                std::span<const FieldElement> r, const DistOpening& opening,
                std::size_t spot_checks = pcs::kDefaultSpotChecks) const {
        if (commitments.size() != topo_.n_clusters ||
            opening.cluster_openings.size() != topo_.n_clusters) {
            return false;
        }
        std::size_t member_vars = 0, cluster_vars = 0;
        while ((std::size_t{1} << member_vars) < topo_.cluster_size) ++member_vars;
        while ((std::size_t{1} << cluster_vars) < topo_.n_clusters) ++cluster_vars;
        const auto r_cluster_local = r.subspan(0, r.size() - cluster_vars);
        const auto r_top = r.subspan(r.size() - cluster_vars);
        FieldElement combined = FieldElement::zero(cfg_);
        for (std::size_t c = 0; c < topo_.n_clusters; ++c) {
            Transcript tr = opening_transcript(c);
            if (!pcs::verify_open(commitments[c], r_cluster_local,
                                  opening.cluster_openings[c], tr, cfg_,
                                  spot_checks)) {
                return false;
            }
            combined += chi_eval(c, r_top, cfg_) * opening.cluster_openings[c].value;
        }
        return combined == opening.combined_value;
    }

    const std::vector<SharedMempool>& pools() const { return pools_; }
    std::vector<SharedMempool>& pools() { return pools_; }

private:
    Transcript opening_transcript(std::size_t cluster) const {
        Transcript tr("dgkr.pc.cluster", cfg_);
        tr.absorb_u64(cluster);
        return tr;
    }

    pcs::EvalMatrix assemble(std::size_t cluster) const {
        const std::size_t row_len = std::size_t{1} << row_vars_;
        const std::size_t width = cfg_->byte_width();
        std::vector<FieldElement> data;
        data.reserve(topo_.cluster_size * row_len);
        for (std::size_t m = 0; m < topo_.cluster_size; ++m) {
            auto region = pools_[cluster].read_region(m);
            for (std::size_t j = 0; j < row_len; ++j) {
                data.push_back(FieldElement::from_bytes(
                    region.subspan(j * width, width), cfg_));
            }
        }
        return pcs::EvalMatrix(cfg_, topo_.cluster_size, row_len, std::move(data));
    }

    ClusterTopology topo_;
    FieldConfigPtr cfg_;
    std::size_t row_vars_ = 0;
    std::vector<SharedMempool> pools_;
    std::vector<pcs::EvalMatrix> matrices_;
    std::vector<pcs::Commitment> commitments_;
};

} // namespace dgkr::cluster
