#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgkr/beacon.hpp"
#include "dgkr/circuit.hpp"
#include "dgkr/cluster.hpp"
#include "dgkr/distinct.hpp"
#include "dgkr/field.hpp"
#include "dgkr/gkr.hpp"
#include "dgkr/pcs.hpp"
#include "dgkr/sumcheck.hpp"
#include "dgkr/transcript.hpp"

namespace dgkr::pipeline {

struct EpochConfig {
    FieldConfigPtr field = FieldConfig::bn254();
    std::size_t validators = 32;
    std::size_t blocks = 4;
    std::size_t tree_depth = 50;
    std::size_t workers = 4;
    std::optional<std::size_t> clusters;
    std::uint64_t seed = 1;
    std::vector<std::string> tamper_hooks; // "name" or "name:block"
    bool record_timings = true;
    std::optional<FieldElement> initial_h;
    /// Processing order of the blocks (permutation); identity when empty.
    std::vector<std::size_t> block_order;
};

struct BlockFlags {
    std::size_t block = 0;
    bool distinct_ok = false;
    bool paths_ok = false;
    bool aggregation_ok = false;
    bool gkr_ok = false;
    bool dist_sumcheck_ok = false;
    bool pc_ok = false;

    bool accepted() const {
        return distinct_ok && paths_ok && aggregation_ok && gkr_ok &&
               dist_sumcheck_ok && pc_ok;
    }
};

struct EpochReport {
    std::vector<BlockFlags> blocks;
    FieldElement final_h;
    cluster::TrafficStats traffic;
    std::size_t clusters = 1;
    std::size_t commitment_payload_bytes = 0;
    std::size_t sumcheck_proof_bytes = 0;
    std::size_t opening_bytes = 0;
    std::map<std::string, double> timings_ms;
    bool record_timings = true;
    std::string field_name;
    nlohmann::ordered_json config_echo;

    bool all_accepted() const {
        return std::all_of(blocks.begin(), blocks.end(),
                           [](const BlockFlags& b) { return b.accepted(); });
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["config"] = config_echo;
        nlohmann::ordered_json jb = nlohmann::ordered_json::array();
        for (const auto& b : blocks) {
            jb.push_back({{"block", b.block},
                          {"distinct", b.distinct_ok},
                          {"paths", b.paths_ok},
                          {"aggregation", b.aggregation_ok},
                          {"gkr", b.gkr_ok},
                          {"dist_sumcheck", b.dist_sumcheck_ok},
                          {"pc", b.pc_ok},
                          {"accepted", b.accepted()}});
        }
        j["blocks"] = jb;
        j["final_h_cur"] = to_hex(final_h.to_bytes());
        j["traffic"] = traffic.to_json();
        j["proof_sizes"] = {{"clusters", clusters},
                            {"commitment_payload_bytes", commitment_payload_bytes},
                            {"sumcheck_proof_bytes", sumcheck_proof_bytes},
                            {"opening_bytes", opening_bytes}};
        if (record_timings) {
            nlohmann::ordered_json jt;
            for (const auto& [k, v] : timings_ms) jt[k] = v;
            j["timings_ms"] = jt;
        }
        j["all_accepted"] = all_accepted();
        return j;
    }
};

namespace detail {

struct Hook {
    std::string name;
    std::size_t block = 0;
};

inline std::vector<Hook> parse_hooks(const std::vector<std::string>& specs,
                                     std::size_t n_blocks) {
    static const std::vector<std::string> known{
        "dup-index", "flip-sibling", "perturb-round-poly", "mempool-overwrite"};
    std::vector<Hook> hooks;
    for (const auto& spec : specs) {
        Hook h;
        const auto colon = spec.find(':');
        h.name = spec.substr(0, colon);
        if (std::find(known.begin(), known.end(), h.name) == known.end()) {
            throw std::invalid_argument("unknown tamper hook: " + h.name);
        }
        if (colon != std::string::npos) {
            h.block = static_cast<std::size_t>(std::stoull(spec.substr(colon + 1)));
        }
        if (h.block >= n_blocks) {
            throw std::invalid_argument("tamper hook block out of range");
        }
        hooks.push_back(std::move(h));
    }
    return hooks;
}

inline bool hook_active(const std::vector<Hook>& hooks, const std::string& name,
                        std::size_t block) {
    for (const auto& h : hooks) {
        if (h.name == name && h.block == block) return true;
    }
    return false;
}

/// Contiguous partition of validator indexes; the first (n % blocks) blocks
/// take one extra.
inline std::vector<std::vector<std::uint64_t>> partition_indexes(std::size_t n,
                                                                 std::size_t blocks) {
    std::vector<std::vector<std::uint64_t>> out(blocks);
    const std::size_t base = n / blocks;
    const std::size_t extra = n % blocks;
    std::uint64_t next = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t take = base + (b < extra ? 1 : 0);
        for (std::size_t k = 0; k < take; ++k) out[b].push_back(next++);
    }
    return out;
}

class StopWatch {
public:
    explicit StopWatch(std::map<std::string, double>& sink, std::string key)
        : sink_(sink), key_(std::move(key)),
          start_(std::chrono::steady_clock::now()) {}
    ~StopWatch() {
        const auto dt = std::chrono::steady_clock::now() - start_;
        sink_[key_] +=
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(dt)
                .count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string key_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

inline void validate_config(const EpochConfig& cfg) {
    if (cfg.validators < 1) throw std::invalid_argument("validators must be >= 1");
    if (cfg.blocks < 1) throw std::invalid_argument("blocks must be >= 1");
    if (cfg.workers == 0 || (cfg.workers & (cfg.workers - 1)) != 0) {
        throw std::invalid_argument("workers must be a power of two");
    }
    if (!cfg.block_order.empty()) {
        std::vector<std::size_t> sorted = cfg.block_order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t b = 0; b < cfg.blocks; ++b) {
            if (b >= sorted.size() || sorted[b] != b) {
                throw std::invalid_argument("block order must permute 0..blocks-1");
            }
        }
        if (sorted.size() != cfg.blocks) {
            throw std::invalid_argument("block order must permute 0..blocks-1");
        }
    }
    // Delegated checks: cluster divisibility and tree capacity.
    cluster::ClusterTopology::plan(cfg.workers, cfg.clusters);
}

/*
 * One demo epoch: synthetic beacon state, then per block a sorted index
 * list with membership proofs, the pairwise-distinct check with chain
 * update, the key-aggregation chain, a GKR proof over a generated circuit,
 * and a distributed sumcheck plus distributed commit/open over sharded
 * polynomial workloads. Tamper hooks flip exactly their targeted check.
 */
inline EpochReport run_epoch(const EpochConfig& cfg) {
    validate_config(cfg);
    const FieldConfigPtr& field = cfg.field;
    const auto hooks = detail::parse_hooks(cfg.tamper_hooks, cfg.blocks);
    const auto topo = cluster::ClusterTopology::plan(cfg.workers, cfg.clusters);

    EpochReport report;
    report.record_timings = cfg.record_timings;
    report.field_name = field->name();
    report.clusters = topo.n_clusters;
    report.config_echo = {{"field", field->name()},
                          {"validators", cfg.validators},
                          {"blocks", cfg.blocks},
                          {"tree_depth", cfg.tree_depth},
                          {"workers", cfg.workers},
                          {"clusters", topo.n_clusters},
                          {"seed", cfg.seed},
                          {"tamper", cfg.tamper_hooks}};
    report.blocks.resize(cfg.blocks);

    auto validators = beacon::gen_validators(cfg.validators, cfg.seed);
    std::optional<beacon::BeaconTree> tree;
    {
        detail::StopWatch t(report.timings_ms, "beacon_build");
        tree.emplace(std::span<const beacon::ValidatorRecord>(validators),
                     cfg.tree_depth);
    }

    auto chain = distinct::ChainState::fresh(field, cfg.validators);
    if (cfg.initial_h) chain.h = *cfg.initial_h;

    const auto index_sets = detail::partition_indexes(cfg.validators, cfg.blocks);
    std::vector<std::size_t> order(cfg.blocks);
    std::iota(order.begin(), order.end(), 0);
    if (!cfg.block_order.empty()) order = cfg.block_order;

    for (std::size_t b : order) {
        BlockFlags& flags = report.blocks[b];
        flags.block = b;
        std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * (b + 1)));

        // --- sorted index list + distinct check -------------------------
        std::vector<FieldElement> sorted_list;
        for (std::uint64_t idx : index_sets[b]) {
            sorted_list.push_back(FieldElement::from_u64(field, idx));
        }
        std::vector<FieldElement> unsorted = sorted_list;
        std::shuffle(unsorted.begin(), unsorted.end(), rng);
        if (detail::hook_active(hooks, "dup-index", b) && unsorted.size() >= 2) {
            unsorted[1] = unsorted[0];
            sorted_list = unsorted;
            std::sort(sorted_list.begin(), sorted_list.end(),
                      [](const FieldElement& x, const FieldElement& y) { return x < y; });
        }
        {
            detail::StopWatch t(report.timings_ms, "distinct");
            flags.distinct_ok = distinct::pairwise_distinct_check(
                unsorted, sorted_list, field);
        }

        // --- membership paths -------------------------------------------
        {
            detail::StopWatch t(report.timings_ms, "membership");
            flags.paths_ok = true;
            bool first = true;
            for (std::uint64_t idx : index_sets[b]) {
                auto path = tree->prove_membership(idx);
                if (first && detail::hook_active(hooks, "flip-sibling", b)) {
                    if (!path.siblings.empty()) {
                        path.siblings[0][0] ^= 0x01;
                    } else {
                        path.leaf[0] ^= 0x01;
                    }
                }
                first = false;
                if (!beacon::BeaconTree::verify_membership(tree->root(),
                                                           validators[idx], path)) {
                    flags.paths_ok = false;
                }
            }
        }

        // --- chain update (gated like the contract would) ----------------
        if (flags.distinct_ok && flags.paths_ok) {
            distinct::IndexList block_list{field, {}, chain.n_max};
            for (std::uint64_t idx : index_sets[b]) {
                block_list.items.push_back(FieldElement::from_u64(field, idx));
            }
            chain = distinct::chain_update(chain, block_list);
        }

        // --- key aggregation chain ---------------------------------------
        {
            detail::StopWatch t(report.timings_ms, "aggregation");
            if (index_sets[b].empty()) {
                flags.aggregation_ok = true;
            } else {
                std::vector<beacon::ValidatorRecord> block_records;
                for (std::uint64_t idx : index_sets[b]) {
                    block_records.push_back(validators[idx]);
                }
                auto aggregates = beacon::aggregate_chain(block_records, field);
                std::vector<FieldElement> keys;
                for (const auto& r : block_records) {
                    keys.push_back(beacon::key_scalar(r, field));
                }
                flags.aggregation_ok = beacon::check_chain_links(keys, aggregates);
            }
        }

        // --- GKR over a generated circuit workload -----------------------
        {
            detail::StopWatch t(report.timings_ms, "gkr");
            circuit::RandomCircuitParams params;
            params.input_size = 8;
            params.depth = 2 + (b % 2);
            params.max_gates_per_layer = 6;
            params.max_nested = 3;
            auto workload = circuit::random_general_circuit(rng, params);
            std::vector<FieldElement> inputs;
            for (std::size_t i = 0; i < params.input_size; ++i) {
                inputs.push_back(random_element(field, rng));
            }
            Transcript prover_tr("dgkr.epoch.gkr", field);
            prover_tr.absorb_u64(b);
            auto proof = gkr::gkr_prove(workload, inputs, field, prover_tr);
            Transcript verifier_tr("dgkr.epoch.gkr", field);
            verifier_tr.absorb_u64(b);
            auto outputs = workload.outputs(inputs, field);
            auto vr = gkr::gkr_verify(workload, outputs, proof, field, verifier_tr);
            std::vector<FieldElement> padded = inputs;
            padded.resize(workload.padded_size(0), FieldElement::zero(field));
            MultilinearTable input_table(field, workload.padded_log2(0), padded);
            flags.gkr_ok = vr.accept &&
                           gkr::check_input_claims(vr.input_claims, input_table);
        }

        // --- distributed sumcheck over sharded product pairs --------------
        const std::size_t local_vars = 3;
        std::size_t index_vars = 0;
        while ((std::size_t{1} << index_vars) < cfg.workers) ++index_vars;
        const std::size_t total_vars = local_vars + index_vars;
        std::vector<sumcheck::ProductPair> full_pairs;
        {
            auto random_table = [&]() {
                std::vector<FieldElement> v;
                for (std::size_t i = 0; i < (std::size_t{1} << total_vars); ++i) {
                    v.push_back(random_element(field, rng));
                }
                return MultilinearTable(field, total_vars, std::move(v));
            };
            MultilinearTable f0 = random_table();
            full_pairs.push_back(sumcheck::ProductPair{f0, random_table()});
            full_pairs.push_back(sumcheck::ProductPair{f0, random_table()});
        }
        auto shares = cluster::shard_pairs(full_pairs, cfg.workers);
        {
            detail::StopWatch t(report.timings_ms, "dist_sumcheck");
            report.traffic.begin_phase("sumcheck");
            Transcript tr("dgkr.epoch.dist", field);
            tr.absorb_u64(b);
            auto proof = cluster::dist_sumcheck(topo, shares, tr, report.traffic);
            report.sumcheck_proof_bytes = proof.to_bytes().size();
            if (detail::hook_active(hooks, "perturb-round-poly", b) &&
                !proof.rounds.empty()) {
                proof.rounds[0].coeffs[0] += FieldElement::one(field);
            }
            Transcript vtr("dgkr.epoch.dist", field);
            vtr.absorb_u64(b);
            auto vres = sumcheck::verify_product_sum(proof.claimed_sum, proof, vtr);
            flags.dist_sumcheck_ok = vres.accept;
        }

        // --- distributed commit/open --------------------------------------
        {
            detail::StopWatch t(report.timings_ms, "dist_pc");
            std::vector<MultilinearTable> rows;
            for (const auto& s : shares) {
                rows.push_back(s.pairs[0].f);
            }
            cluster::DistPc pc(topo, field);
            cluster::DistPc::FaultHook fault;
            if (detail::hook_active(hooks, "mempool-overwrite", b)) {
                fault = [&](std::vector<cluster::SharedMempool>& pools) {
                    auto region = pools[0].read_region(0);
                    const std::size_t width = field->byte_width();
                    FieldElement v =
                        FieldElement::from_bytes(region.subspan(0, width), field);
                    auto forged = (v + FieldElement::one(field)).to_bytes();
                    pools[0].fault_inject(
                        0, std::span<const std::uint8_t>(forged.data(), forged.size()));
                };
            }
            report.traffic.begin_phase("commit");
            auto commitments = pc.commit(rows, report.traffic, fault);
            report.commitment_payload_bytes = 0;
            for (const auto& com : commitments) {
                report.commitment_payload_bytes += com.to_bytes().size();
            }
            Transcript point_tr("dgkr.epoch.pc-point", field);
            point_tr.absorb_u64(b);
            for (const auto& com : commitments) {
                point_tr.absorb(std::span<const std::uint8_t>(com.root.data(),
                                                              com.root.size()));
            }
            std::vector<FieldElement> r;
            for (std::size_t k = 0; k < total_vars; ++k) {
                r.push_back(point_tr.challenge());
            }
            report.traffic.begin_phase("open");
            auto opening = pc.open(r, report.traffic);
            report.opening_bytes = 0;
            for (const auto& op : opening.cluster_openings) {
                report.opening_bytes += op.to_bytes().size();
            }
            const bool opening_ok = pc.verify(commitments, r, opening);
            const FieldElement expected = full_pairs[0].f.eval(r);
            flags.pc_ok = opening_ok && opening.combined_value == expected;
        }
    }

    report.final_h = chain.h;
    if (!cfg.record_timings) report.timings_ms.clear();
    return report;
}

} // namespace dgkr::pipeline
