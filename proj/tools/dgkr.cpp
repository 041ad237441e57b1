// dgkr command-line front end: demo epoch runner, avalanche experiment,
// scaling bench and circuit-file tooling.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgkr/beacon.hpp"
#include "dgkr/circuit.hpp"
#include "dgkr/cluster.hpp"
#include "dgkr/distinct.hpp"
#include "dgkr/field.hpp"
#include "dgkr/gkr.hpp"
#include "dgkr/pipeline.hpp"
#include "dgkr/sha256.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("DGKR_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "dgkr: " << msg << "\n";
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

std::optional<dgkr::FieldElement> read_state_file(const std::string& path,
                                                  const dgkr::FieldConfigPtr& cfg) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string hex;
    in >> hex;
    if (hex.size() != 2 * cfg->byte_width()) {
        throw std::invalid_argument("state file has wrong length");
    }
    std::vector<std::uint8_t> bytes;
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        bytes.push_back(static_cast<std::uint8_t>(
            std::stoul(hex.substr(i, 2), nullptr, 16)));
    }
    return dgkr::FieldElement::from_bytes(bytes, cfg);
}

struct DemoOptions {
    std::string field_name = "bn254";
    std::size_t validators = 32;
    std::size_t blocks = 4;
    std::size_t tree_depth = 50;
    std::size_t workers = 4;
    std::size_t clusters = 0; // 0 = auto
    std::uint64_t seed = 1;
    std::string report_path = "epoch_report.json";
    std::string state_path;
    std::string validators_file;
    std::vector<std::string> tamper;
};

int run_demo(const DemoOptions& opt) {
    dgkr::pipeline::EpochConfig cfg;
    cfg.field = dgkr::FieldConfig::by_name(opt.field_name);
    cfg.validators = opt.validators;
    cfg.blocks = opt.blocks;
    cfg.tree_depth = opt.tree_depth;
    cfg.workers = opt.workers;
    if (opt.clusters != 0) cfg.clusters = opt.clusters;
    cfg.seed = opt.seed;
    cfg.tamper_hooks = opt.tamper;
    if (!opt.validators_file.empty()) {
        std::ifstream in(opt.validators_file);
        if (!in) throw std::invalid_argument("cannot open validators file");
        nlohmann::json j;
        in >> j;
        cfg.validators = dgkr::beacon::load_validators(j).size();
        log_info("loaded " + std::to_string(cfg.validators) + " validators");
    }
    if (!opt.state_path.empty()) {
        cfg.initial_h = read_state_file(opt.state_path, cfg.field);
    }
    auto report = dgkr::pipeline::run_epoch(cfg);
    if (!write_file(opt.report_path, report.to_json().dump(2) + "\n")) {
        std::cerr << "dgkr: cannot write report to " << opt.report_path << "\n";
        return 2;
    }
    if (!opt.state_path.empty()) {
        write_file(opt.state_path, dgkr::to_hex(report.final_h.to_bytes()) + "\n");
    }
    log_info("report written to " + opt.report_path);
    if (!report.all_accepted()) {
        std::cerr << "dgkr: verification failed for at least one block\n";
        return 1;
    }
    return 0;
}

struct BitchangeOptions {
    std::string field_name = "bn254";
    std::size_t count = 1000000;
    std::string out_path = "index-bit_change.csv";
};

int run_bitchange(const BitchangeOptions& opt) {
    auto cfg = dgkr::FieldConfig::by_name(opt.field_name);
    auto result = dgkr::distinct::bitchange_experiment(opt.count, cfg);
    if (!write_file(opt.out_path, result.to_csv())) {
        std::cerr << "dgkr: cannot write " << opt.out_path << "\n";
        return 2;
    }
    log_info("wrote " + std::to_string(result.probabilities.size()) + " rows to " +
             opt.out_path);
    return 0;
}

struct BenchOptions {
    std::string field_name = "bn254";
    std::vector<std::size_t> workers;
    std::size_t vars = 10;
    std::size_t pairs = 2;
    std::uint64_t seed = 1;
    std::string out_path = "bench.csv";
};

int run_bench(const BenchOptions& opt) {
    if (opt.workers.empty()) {
        std::cerr << "dgkr: bench needs at least one worker count\n";
        return 2;
    }
    auto cfg = dgkr::FieldConfig::by_name(opt.field_name);
    std::ostringstream csv;
    csv << "numval,time\n";
    for (std::size_t n : opt.workers) {
        if (n == 0 || (n & (n - 1)) != 0 || (std::size_t{1} << opt.vars) < n) {
            std::cerr << "dgkr: invalid worker count " << n << "\n";
            return 2;
        }
        std::mt19937_64 rng(opt.seed);
        std::vector<dgkr::sumcheck::ProductPair> full;
        auto random_table = [&]() {
            std::vector<dgkr::FieldElement> v;
            for (std::size_t i = 0; i < (std::size_t{1} << opt.vars); ++i) {
                v.push_back(dgkr::random_element(cfg, rng));
            }
            return dgkr::MultilinearTable(cfg, opt.vars, std::move(v));
        };
        auto f0 = random_table();
        for (std::size_t k = 0; k < opt.pairs; ++k) {
            full.push_back(dgkr::sumcheck::ProductPair{f0, random_table()});
        }
        auto shares = dgkr::cluster::shard_pairs(full, n);
        auto topo = dgkr::cluster::ClusterTopology::plan(n);
        dgkr::cluster::TrafficStats stats;
        const auto start = std::chrono::steady_clock::now();
        {
            dgkr::Transcript tr("dgkr.bench", cfg);
            stats.begin_phase("sumcheck");
            dgkr::cluster::dist_sumcheck(topo, shares, tr, stats);
        }
        {
            std::vector<dgkr::MultilinearTable> rows;
            for (const auto& s : shares) rows.push_back(s.pairs[0].f);
            dgkr::cluster::DistPc pc(topo, cfg);
            stats.begin_phase("commit");
            pc.commit(rows, stats);
        }
        const auto dt = std::chrono::steady_clock::now() - start;
        const double seconds =
            std::chrono::duration_cast<std::chrono::duration<double>>(dt).count();
        csv << n << ',' << seconds << '\n';
        log_info("N=" + std::to_string(n) + " took " + std::to_string(seconds) + "s");
    }
    if (!write_file(opt.out_path, csv.str())) {
        std::cerr << "dgkr: cannot write " << opt.out_path << "\n";
        return 2;
    }
    return 0;
}

struct CircuitOptions {
    std::string file;
    std::string field_name = "bn254";
    std::string inputs_csv;
    bool prove = false;
};

int run_circuit(const CircuitOptions& opt) {
    std::ifstream in(opt.file);
    if (!in) {
        std::cerr << "dgkr: cannot open " << opt.file << "\n";
        return 2;
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "dgkr: invalid circuit file: " << e.what() << "\n";
        return 2;
    }
    auto c = dgkr::circuit::GeneralCircuit::from_json(j);
    auto violations = c.validate();
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
        return 2;
    }
    std::cout << "circuit ok: " << c.depth() << " layers, input size "
              << c.input_size() << "\n";
    if (opt.inputs_csv.empty()) return 0;

    auto cfg = dgkr::FieldConfig::by_name(opt.field_name);
    std::vector<dgkr::FieldElement> inputs;
    std::stringstream ss(opt.inputs_csv);
    for (std::string item; std::getline(ss, item, ',');) {
        inputs.push_back(dgkr::FieldElement(cfg, dgkr::BigInt(item)));
    }
    if (inputs.size() != c.input_size()) {
        std::cerr << "dgkr: expected " << c.input_size() << " inputs\n";
        return 2;
    }
    auto outputs = c.outputs(inputs, cfg);
    std::cout << "outputs:";
    for (std::size_t i = 0; i < c.layer_size(c.output_layer()); ++i) {
        std::cout << ' ' << outputs[i].value().str();
    }
    std::cout << "\n";
    if (!opt.prove) return 0;

    dgkr::Transcript ptr("dgkr.cli.circuit", cfg);
    auto proof = dgkr::gkr::gkr_prove(c, inputs, cfg, ptr);
    dgkr::Transcript vtr("dgkr.cli.circuit", cfg);
    auto vr = dgkr::gkr::gkr_verify(c, outputs, proof, cfg, vtr);
    std::vector<dgkr::FieldElement> padded = inputs;
    padded.resize(c.padded_size(0), dgkr::FieldElement::zero(cfg));
    dgkr::MultilinearTable table(cfg, c.padded_log2(0), padded);
    const bool ok = vr.accept && dgkr::gkr::check_input_claims(vr.input_claims, table);
    std::cout << (ok ? "proof verified" : "proof rejected") << "\n";
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed sumcheck/GKR proving toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    DemoOptions demo;
    auto* demo_cmd = app.add_subcommand("demo", "run a full demo epoch");
    demo_cmd->add_option("--field", demo.field_name, "field name (bn254, goldilocks)");
    demo_cmd->add_option("--validators", demo.validators, "validator count");
    demo_cmd->add_option("--blocks", demo.blocks, "blocks per epoch");
    demo_cmd->add_option("--tree-depth", demo.tree_depth, "beacon tree depth");
    demo_cmd->add_option("--workers", demo.workers, "worker count (power of two)");
    demo_cmd->add_option("--clusters", demo.clusters, "cluster count (0 = auto)");
    demo_cmd->add_option("--seed", demo.seed, "run seed");
    demo_cmd->add_option("--report", demo.report_path, "report output path");
    demo_cmd->add_option("--state-file", demo.state_path,
                         "chain state file (read if present, updated on exit)");
    demo_cmd->add_option("--validators-file", demo.validators_file,
                         "load validator set from JSON instead of generating");
    demo_cmd->add_option("--tamper", demo.tamper,
                         "tamper hooks: dup-index, flip-sibling, perturb-round-poly, "
                         "mempool-overwrite (suffix :<block> to target a block)");

    BitchangeOptions bitchange;
    auto* bit_cmd =
        app.add_subcommand("bitchange", "bit-change probability experiment");
    bit_cmd->add_option("--field", bitchange.field_name, "field name");
    bit_cmd->add_option("--count", bitchange.count, "sample count (>= 10^4)");
    bit_cmd->add_option("--out", bitchange.out_path, "CSV output path");

    BenchOptions bench;
    auto* bench_cmd =
        app.add_subcommand("bench", "distributed sumcheck/commit scaling bench");
    bench_cmd->add_option("--field", bench.field_name, "field name");
    bench_cmd->add_option("--workers", bench.workers, "worker counts to bench")
        ->delimiter(',');
    bench_cmd->add_option("--vars", bench.vars, "log2 of table size");
    bench_cmd->add_option("--pairs", bench.pairs, "product pair count");
    bench_cmd->add_option("--seed", bench.seed, "run seed");
    bench_cmd->add_option("--out", bench.out_path, "CSV output path");

    CircuitOptions circuit;
    auto* circuit_cmd =
        app.add_subcommand("circuit", "validate/evaluate/prove a circuit file");
    circuit_cmd->add_option("--file", circuit.file, "circuit JSON path")->required();
    circuit_cmd->add_option("--field", circuit.field_name, "field name");
    circuit_cmd->add_option("--inputs", circuit.inputs_csv,
                            "comma-separated input values");
    circuit_cmd->add_flag("--prove", circuit.prove, "run a proof over the inputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (demo_cmd->parsed()) return run_demo(demo);
        if (bit_cmd->parsed()) return run_bitchange(bitchange);
        if (bench_cmd->parsed()) return run_bench(bench);
        if (circuit_cmd->parsed()) return run_circuit(circuit);
    } catch (const std::invalid_argument& e) {
        std::cerr << "dgkr: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "dgkr: error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
