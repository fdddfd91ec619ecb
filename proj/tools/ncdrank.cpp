#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncdrank/decomposition.hpp"
#include "ncdrank/error.hpp"
#include "ncdrank/eval.hpp"
#include "ncdrank/graph.hpp"
#include "ncdrank/ncdlab.hpp"
#include "ncdrank/ranking.hpp"
#include "ncdrank/separable.hpp"
#include "ncdrank/synthetic.hpp"

using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitPrimitivity = 4;

struct Exit {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ncd::Error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// FNV-1a, 64 bit.
std::string digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string sig17(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, ec == std::errc{} ? ptr : buf);
}

int workers_from(int flag) {
    if (const char* env = std::getenv("NCDRANK_WORKERS")) {
        try {
            const int w = std::stoi(env);
            if (w > 0) return w;
        } catch (const std::exception&) {
        }
        throw ncd::InvalidArgument("NCDRANK_WORKERS must be a positive integer");
    }
    return flag;
}

std::vector<double> read_vector_file(const std::string& path, const ncd::SparseGraph& g) {
    // "label value" lines; unlisted nodes get 0.
    std::ifstream f(path);
    if (!f) throw ncd::Error("cannot open " + path);
    std::vector<double> v(g.node_count(), 0.0);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string label;
        double x;
        if (!(ss >> label) || label[0] == '#') continue;
        if (!(ss >> x)) throw ncd::ParseError("expected 'node value'", lineno);
        auto id = g.labels().find(label);
        if (!id) throw ncd::ParseError("unknown node label '" + label + "'", lineno);
        v[*id] = x;
    }
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (!(s > 0.0)) throw ncd::InvalidArgument(path + ": vector has no mass");
    for (auto& x : v) x /= s;
    return v;
}

std::size_t suffix_index(const std::string& spec, const std::string& prefix) {
    if (spec.size() == prefix.size()) return 0;
    return static_cast<std::size_t>(std::stoul(spec.substr(prefix.size() + 1)));
}

ncd::TeleportSpec parse_teleport(const std::string& spec, const ncd::SparseGraph& g) {
    if (spec == "uniform") return ncd::UniformTeleport{};
    if (spec == "blocks" || spec.rfind("blocks:", 0) == 0) return ncd::BlockBalancedTeleport{suffix_index(spec, "blocks")};
    if (spec.rfind("file:", 0) == 0) return ncd::CustomTeleport{read_vector_file(spec.substr(5), g)};
    throw ncd::InvalidArgument("unknown --teleport '" + spec + "'");
}

ncd::DanglingStrategy parse_dangling(const std::string& spec, const ncd::SparseGraph& g) {
    if (spec == "strong") return ncd::StronglyPreferential{};
    if (spec == "ncd" || spec.rfind("ncd:", 0) == 0) return ncd::NcdAwareDangling{suffix_index(spec, "ncd")};
    if (spec.rfind("weak:", 0) == 0) return ncd::WeaklyPreferential{read_vector_file(spec.substr(5), g)};
    throw ncd::InvalidArgument("unknown --dangling '" + spec + "'");
}

struct ModelInputs {
    std::string graph_path;
    std::vector<std::string> block_paths;
    ncd::SparseGraph graph;
    std::vector<ncd::Decomposition> decomps;
    json inputs = json::array();
};

ModelInputs load_model(const std::string& graph_path, const std::vector<std::string>& block_paths) {
    ModelInputs m;
    m.graph_path = graph_path;
    m.block_paths = block_paths;
    const auto gtext = read_file(graph_path);
    std::istringstream gs(gtext);
    m.graph = ncd::load_edge_list(gs);
    m.inputs.push_back({{"path", graph_path}, {"fnv1a64", digest(gtext)}});
    for (const auto& p : block_paths) {
        const auto text = read_file(p);
        std::istringstream bs(text);
        try {
            m.decomps.push_back(ncd::load_decomposition(bs, m.graph));
        } catch (const ncd::ParseError& e) {
            throw ncd::ParseError(p + ": " + e.what(), 0);
        }
        m.inputs.push_back({{"path", p}, {"fnv1a64", digest(text)}});
    }
    return m;
}

ncd::RankingConfig make_config(double eta, std::vector<double> mus, std::size_t decomp_count) {
    if (!mus.empty() && decomp_count == 0) throw ncd::InvalidArgument("--mu given without --blocks");
    if (mus.empty() && decomp_count > 0) mus.assign(decomp_count, 0.1 / static_cast<double>(decomp_count));
    if (mus.size() != decomp_count)
        throw ncd::InvalidArgument("--mu must be given once per --blocks (" + std::to_string(decomp_count) + ")");
    ncd::RankingConfig cfg;
    cfg.eta = eta;
    cfg.mus = std::move(mus);
    return cfg;
}

void write_rank_tsv(std::ostream& out, const ncd::SparseGraph& g, const std::vector<double>& pi) {
    std::vector<std::size_t> order(pi.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pi[a] > pi[b]; });
    for (auto u : order) out << g.labels().label(static_cast<ncd::NodeId>(u)) << '\t' << sig17(pi[u]) << '\n';
}

json primitivity_verdict(std::span<const ncd::ProximityFactors> factors, std::span<const std::string> paths) {
    json out;
    json singles = json::array();
    for (std::size_t i = 0; i < factors.size(); ++i) {
        auto w = ncd::indicator_matrix(factors[i]);
        auto v = ncd::check_primitivity_single(w);
        singles.push_back({{"path", paths[i]},
                           {"blocks", w.order()},
                           {"single", v.primitive ? "primitive" : "reducible"},
                           {"components", v.witness.component_count}});
    }
    out["decompositions"] = singles;
    auto suff = ncd::check_sufficient_conditions(factors);
    json s = {{"verdict", ncd::to_string(suff.kind)}};
    if (suff.kind != ncd::SufficientConditionVerdict::Kind::Inconclusive) s["first"] = suff.first;
    if (suff.kind == ncd::SufficientConditionVerdict::Kind::ConditionII) s["second"] = suff.second;
    out["sufficient_condition"] = s;
    auto stacked = ncd::check_primitivity_single(ncd::stacked_indicator(factors));
    out["stacked"] = stacked.primitive ? "primitive" : "reducible";
    out["primitive"] = stacked.primitive;
    return out;
}

// ---------------------------------------------------------------- rank

struct RankArgs {
    std::string graph;
    std::vector<std::string> blocks;
    double eta = 0.85;
    std::vector<double> mus;
    std::string teleport = "uniform";
    std::string dangling;
    double tol = 1e-8;
    std::size_t max_iters = 1000;
    std::string mode = "power";
    std::string out;
    std::string manifest;
    int workers = 0;
    bool verbose = false;
};

int cmd_rank(const RankArgs& a, const std::vector<std::string>& argv) {
    const auto t0 = std::chrono::steady_clock::now();
    auto m = load_model(a.graph, a.blocks);
    auto cfg = make_config(a.eta, a.mus, m.decomps.size());
    cfg.teleport = parse_teleport(a.teleport, m.graph);
    const auto dangling = a.dangling.empty() ? (m.decomps.empty() ? "strong" : "ncd") : a.dangling;
    cfg.dangling = parse_dangling(dangling, m.graph);
    cfg.tol = a.tol;
    cfg.max_iters = a.max_iters;
    cfg.workers = workers_from(a.workers);
    cfg.validate(m.decomps.size());

    std::vector<ncd::ProximityFactors> factors;
    for (const auto& d : m.decomps) factors.push_back(ncd::build_factors(m.graph, d));

    json manifest;
    manifest["command"] = argv;
    if (cfg.no_teleport_mode()) {
        if (factors.empty()) throw Exit{kExitPrimitivity, "no-teleport mode needs a decomposition to verify primitivity"};
        auto verdict = primitivity_verdict(factors, m.block_paths);
        manifest["primitivity"] = verdict;
        if (!verdict["primitive"].get<bool>())
            throw Exit{kExitPrimitivity, "eta + sum(mu) = 1 but the model is not primitive"};
    }

    std::string mode_used = a.mode;
    ncd::RankVector rank;
    json sep;
    std::vector<std::string> warnings;
    if (a.mode == "separable" || a.mode == "auto") {
        auto det = ncd::detect_aggregates(m.graph, m.decomps, cfg);
        const auto* part = std::get_if<ncd::AggregatePartition>(&det);
        if (a.mode == "separable" && !part) {
            const auto& ns = std::get<ncd::NotSeparable>(det);
            throw ncd::InvalidArgument("model is not separable: dangling patch of '" + m.graph.labels().label(ns.from) +
                                       "' reaches '" + m.graph.labels().label(ns.to) + "'");
        }
        mode_used = (part && (a.mode == "separable" || part->L > 1)) ? "separable" : "power";
    } else if (a.mode != "power") {
        throw ncd::InvalidArgument("unknown --mode '" + a.mode + "'");
    }

    if (mode_used == "separable") {
        auto sol = ncd::solve_separable(m.graph, m.decomps, cfg);
        rank = std::move(sol.rank);
        sep = {{"L", sol.partition.L},
               {"sizes", sol.partition.sizes()},
               {"xi", sol.xi},
               {"sub_iterations", sol.sub_iterations}};
    } else {
        ncd::RankOperator op(m.graph, std::move(factors), ncd::teleport_vector(cfg.teleport, m.graph, m.decomps), cfg);
        warnings = op.warnings();
        rank = ncd::power_iterate(op);
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (a.verbose)
        for (std::size_t i = 0; i < rank.residual_history.size(); ++i)
            std::cerr << "iter " << i + 1 << " residual " << sig17(rank.residual_history[i]) << '\n';

    if (a.out.empty()) {
        write_rank_tsv(std::cout, m.graph, rank.pi);
    } else {
        std::ofstream f(a.out, std::ios::binary);
        if (!f) throw ncd::Error("cannot write " + a.out);
        write_rank_tsv(f, m.graph, rank.pi);
    }

    const auto manifest_path = !a.manifest.empty() ? a.manifest : (a.out.empty() ? "" : a.out + ".json");
    if (!manifest_path.empty()) {
        const auto wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        manifest["config"] = {{"eta", cfg.eta},
                              {"mu", cfg.mus},
                              {"teleport", a.teleport},
                              {"dangling", dangling},
                              {"tol", cfg.tol},
                              {"max_iters", cfg.max_iters},
                              {"mode", a.mode},
                              {"workers", cfg.workers}};
        manifest["inputs"] = m.inputs;
        manifest["seed"] = nullptr;
        manifest["artifacts"] = {{"rank", a.out}};
        manifest["mode_used"] = mode_used;
        manifest["iterations"] = rank.iterations;
        manifest["converged"] = rank.converged;
        manifest["final_residual"] = rank.final_residual;
        manifest["residuals"] = rank.residual_history;
        manifest["eta_plus_mu_bound"] = cfg.eta + cfg.mu_total();
        if (rank.residual_history.size() >= 5)
            manifest["convergence_ratio"] = ncd::convergence_ratio(rank.residual_history);
        if (!sep.is_null()) manifest["separable"] = sep;
        manifest["warnings"] = warnings;
        manifest["wall_ms"] = wall;
        std::ofstream f(manifest_path);
        if (!f) throw ncd::Error("cannot write " + manifest_path);
        f << manifest.dump(2) << '\n';
    }
    if (!rank.converged) throw Exit{kExitNoConvergence, "did not converge within " + std::to_string(cfg.max_iters) + " iterations"};
    return 0;
}

// ---------------------------------------------------------------- check

struct CheckArgs {
    std::string graph;
    std::vector<std::string> blocks;
    bool separability = false;
    double eta = 0.85;
    std::vector<double> mus;
    std::string teleport = "uniform";
    std::string dangling = "ncd";
    std::string out;
};

int cmd_check(const CheckArgs& a) {
    auto m = load_model(a.graph, a.blocks);
    std::vector<ncd::ProximityFactors> factors;
    for (const auto& d : m.decomps) factors.push_back(ncd::build_factors(m.graph, d));
    json report = primitivity_verdict(factors, m.block_paths);
    report["inputs"] = m.inputs;
    if (a.separability) {
        auto cfg = make_config(a.eta, a.mus, m.decomps.size());
        cfg.teleport = parse_teleport(a.teleport, m.graph);
        cfg.dangling = parse_dangling(a.dangling, m.graph);
        auto det = ncd::detect_aggregates(m.graph, m.decomps, cfg);
        if (const auto* p = std::get_if<ncd::AggregatePartition>(&det)) {
            const auto v = ncd::teleport_vector(cfg.teleport, m.graph, m.decomps);
            report["separability"] = {{"separable", true},
                                      {"L", p->L},
                                      {"sizes", p->sizes()},
                                      {"xi", ncd::coupling_solution(*p, v)},
                                      {"coupling_bound", ncd::coupling_bound(cfg)}};
        } else {
            const auto& ns = std::get<ncd::NotSeparable>(det);
            report["separability"] = {
                {"separable", false},
                {"witness", {m.graph.labels().label(ns.from), m.graph.labels().label(ns.to)}}};
        }
    }
    const auto text = report.dump(2);
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream f(a.out);
        if (!f) throw ncd::Error("cannot write " + a.out);
        f << text << '\n';
    }
    return report["primitive"].get<bool>() ? 0 : 1;
}

// ---------------------------------------------------------------- lab

struct LabArgs {
    std::string matrix;
    std::string partition;
    std::string op;
    std::string adjust = "diagonal";
    std::string out;
    // materialize
    std::string graph;
    std::vector<std::string> blocks;
    double eta = 0.85;
    std::vector<double> mus;
    std::string teleport = "uniform";
    std::string dangling;
};

json to_json(const ncd::lab::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const ncd::lab::Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(r);
    }
    return rows;
}

int cmd_lab(const LabArgs& a) {
    json out;
    out["op"] = a.op;
    std::string text;
    if (a.op == "materialize") {
        if (a.graph.empty()) throw ncd::InvalidArgument("materialize needs --graph");
        auto m = load_model(a.graph, a.blocks);
        auto cfg = make_config(a.eta, a.mus, m.decomps.size());
        cfg.teleport = parse_teleport(a.teleport, m.graph);
        cfg.dangling = parse_dangling(a.dangling.empty() ? (m.decomps.empty() ? "strong" : "ncd") : a.dangling, m.graph);
        std::ostringstream ss;
        ncd::lab::write_csv(ss, ncd::lab::materialize_P(m.graph, m.decomps, cfg));
        text = ss.str();
    } else {
        if (a.matrix.empty()) throw ncd::InvalidArgument("--matrix is required");
        const auto P = ncd::lab::read_csv_file(a.matrix);
        ncd::lab::validate_stochastic(P);
        auto need_partition = [&] {
            if (a.partition.empty()) throw ncd::InvalidArgument("--partition is required for " + a.op);
            auto p = ncd::lab::parse_partition(a.partition);
            p.validate(static_cast<std::size_t>(P.rows()));
            return p;
        };
        if (a.op == "stationary") {
            out["pi"] = to_json(ncd::lab::stationary_dense(P));
        } else if (a.op == "coupling-eps") {
            out["epsilon"] = ncd::lab::coupling_degree(P, need_partition());
        } else if (a.op == "ncd-approx") {
            auto part = need_partition();
            ncd::lab::StochasticityAdjustment adj = ncd::lab::DiagonalAbsorption{};
            if (a.adjust == "proportional")
                adj = ncd::lab::ProportionalAdjustment{};
            else if (a.adjust.rfind("file:", 0) == 0)
                adj = ncd::lab::SuppliedBlocks{ncd::lab::read_stacked_blocks_file(a.adjust.substr(5), part)};
            else if (a.adjust != "diagonal")
                throw ncd::InvalidArgument("unknown --adjust '" + a.adjust + "'");
            auto r = ncd::lab::ncd_approximate(P, part, adj);
            out["pi_tilde"] = to_json(r.pi_tilde);
            out["xi"] = to_json(r.xi);
            out["coupling"] = to_json(r.coupling);
            json blocks = json::array(), dists = json::array();
            for (const auto& b : r.adjusted_blocks) blocks.push_back(to_json(b));
            for (const auto& d : r.block_distributions) dists.push_back(to_json(d));
            out["adjusted_blocks"] = blocks;
            out["block_distributions"] = dists;
        } else if (a.op.rfind("complement:", 0) == 0) {
            const auto I = static_cast<std::size_t>(std::stoul(a.op.substr(11)));
            auto S = ncd::lab::stochastic_complement(P, need_partition(), I);
            out["complement"] = to_json(S);
            out["stationary"] = to_json(ncd::lab::stationary_dense(S));
        } else if (a.op == "exact-complement") {
            auto r = ncd::lab::exact_via_complementation(P, need_partition());
            out["pi"] = to_json(r.pi);
            out["xi"] = to_json(r.xi);
            out["coupling"] = to_json(r.coupling);
            json comps = json::array(), dists = json::array();
            for (const auto& c : r.complements) comps.push_back(to_json(c));
            for (const auto& d : r.complement_distributions) dists.push_back(to_json(d));
            out["complements"] = comps;
            out["complement_distributions"] = dists;
        } else {
            throw ncd::InvalidArgument("unknown --op '" + a.op + "'");
        }
        text = out.dump(2) + "\n";
    }
    if (a.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(a.out);
        if (!f) throw ncd::Error("cannot write " + a.out);
        f << text;
    }
    return 0;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
    std::string kind;
    std::string graph;
    std::vector<std::string> blocks;
    std::size_t synthetic = 0;
    std::size_t synthetic_blocks = 20;
    std::size_t synthetic_communities = 1;
    std::vector<std::string> methods{"ncdawarerank", "pagerank"};
    std::vector<double> levels;
    double node_fraction = 0.1;
    double eta = 0.85;
    double mu = 0.1;
    double alpha = 0.85;
    std::uint64_t seed = 1;
    std::size_t reps = 10;
    std::string out;
};

ncd::MethodSpec method_from(const std::string& name, const ExperimentArgs& a, std::size_t decomp_count) {
    ncd::MethodSpec m;
    m.name = name;
    if (name == "pagerank" || name == "pagerank-ncd") {
        m.pagerank = true;
        m.cfg.eta = a.alpha;
        m.cfg.mus.clear();
        if (name == "pagerank")
            m.cfg.dangling = ncd::StronglyPreferential{};
        else
            m.cfg.dangling = ncd::NcdAwareDangling{};
    } else if (name == "ncdawarerank" || name == "ncdawarerank-strong") {
        if (decomp_count == 0) throw ncd::InvalidArgument(name + " needs --blocks or --synthetic");
        m.cfg.eta = a.eta;
        m.cfg.mus.assign(decomp_count, a.mu / static_cast<double>(decomp_count));
        if (name == "ncdawarerank")
            m.cfg.dangling = ncd::NcdAwareDangling{};
        else
            m.cfg.dangling = ncd::StronglyPreferential{};
    } else {
        throw ncd::InvalidArgument("unknown method '" + name + "'");
    }
    return m;
}

int cmd_experiment(const ExperimentArgs& a) {
    ncd::SparseGraph g;
    std::vector<ncd::Decomposition> decomps;
    if (a.synthetic > 0) {
        ncd::BlockGraphParams p;
        p.nodes = a.synthetic;
        p.blocks = a.synthetic_blocks;
        p.communities = a.synthetic_communities;
        p.seed = a.seed;
        auto bg = ncd::generate_block_graph(p);
        g = std::move(bg.graph);
        decomps.push_back(std::move(bg.blocks));
    } else {
        if (a.graph.empty()) throw ncd::InvalidArgument("--graph or --synthetic is required");
        auto m = load_model(a.graph, a.blocks);
        g = std::move(m.graph);
        decomps = std::move(m.decomps);
    }
    std::vector<ncd::MethodSpec> methods;
    for (const auto& name : a.methods) methods.push_back(method_from(name, a, decomps.size()));

    ncd::ExperimentSpec spec;
    spec.seed = a.seed;
    spec.repetitions = a.reps;
    if (a.kind == "spam") {
        ncd::SpamExperiment s;
        if (a.levels.empty()) {
            for (double f : {0.01, 0.02, 0.05, 0.10})
                s.satellites.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(f * static_cast<double>(g.node_count()))));
        } else {
            for (double l : a.levels) s.satellites.push_back(static_cast<std::size_t>(l));
        }
        spec.kind = s;
    } else if (a.kind == "sparsity") {
        ncd::SparsityExperiment s;
        s.keep_fractions = a.levels.empty() ? std::vector<double>{0.9, 0.8, 0.7, 0.6, 0.5, 0.4} : a.levels;
        spec.kind = s;
    } else if (a.kind == "newpages") {
        ncd::NewPagesExperiment s;
        s.node_fraction = a.node_fraction;
        if (!a.levels.empty()) s.remove_fractions = a.levels;
        spec.kind = s;
    } else {
        throw ncd::InvalidArgument("unknown --kind '" + a.kind + "'");
    }
    auto report = ncd::run_experiment(spec, methods, g, decomps);
    if (a.out.empty()) {
        ncd::write_report_csv(std::cout, report);
    } else {
        std::ofstream f(a.out);
        if (!f) throw ncd::Error("cannot write " + a.out);
        ncd::write_report_csv(f, report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NCDawareRank toolkit"};
    app.require_subcommand(1);
    std::vector<std::string> args(argv, argv + argc);

    RankArgs ra;
    auto* rank = app.add_subcommand("rank", "Compute a ranking vector");
    rank->add_option("--graph", ra.graph, "Edge list")->required();
    rank->add_option("--blocks", ra.blocks, "Decomposition file (repeatable)");
    rank->add_option("--eta", ra.eta, "Weight of the link matrix");
    rank->add_option("--mu", ra.mus, "Weight per decomposition (repeatable, matched to --blocks)");
    rank->add_option("--teleport", ra.teleport, "uniform | blocks[:I] | file:PATH");
    rank->add_option("--dangling", ra.dangling, "strong | weak:PATH | ncd[:I] (default ncd with blocks, else strong)");
    rank->add_option("--tol", ra.tol, "L1 residual tolerance");
    rank->add_option("--max-iters", ra.max_iters, "Iteration cap");
    rank->add_option("--mode", ra.mode, "power | separable | auto");
    rank->add_option("--out", ra.out, "Rank TSV path (stdout if omitted)");
    rank->add_option("--manifest", ra.manifest, "JSON manifest path (default OUT.json)");
    rank->add_option("--workers", ra.workers, "Worker threads (NCDRANK_WORKERS overrides)");
    rank->add_flag("--verbose", ra.verbose, "Log residuals to stderr");

    CheckArgs ca;
    auto* check = app.add_subcommand("check", "Primitivity and separability verdicts");
    check->add_option("--graph", ca.graph, "Edge list")->required();
    check->add_option("--blocks", ca.blocks, "Decomposition file (repeatable)")->required();
    check->add_flag("--separability", ca.separability, "Also detect aggregates");
    check->add_option("--eta", ca.eta, "Weight of the link matrix");
    check->add_option("--mu", ca.mus, "Weight per decomposition");
    check->add_option("--teleport", ca.teleport, "uniform | blocks[:I] | file:PATH");
    check->add_option("--dangling", ca.dangling, "strong | weak:PATH | ncd[:I]");
    check->add_option("--out", ca.out, "JSON path (stdout if omitted)");

    LabArgs la;
    auto* lab = app.add_subcommand("lab", "Dense Markov chain operations");
    lab->add_option("--op", la.op,
                    "stationary | coupling-eps | ncd-approx | complement:I | exact-complement | materialize")
        ->required();
    lab->add_option("--matrix", la.matrix, "Row-stochastic matrix CSV");
    lab->add_option("--partition", la.partition, "Cluster sizes '3,2,3' or groups '0 1;2 3' (0-based)");
    lab->add_option("--adjust", la.adjust, "diagonal | proportional | file:PATH (stacked blocks CSV)");
    lab->add_option("--out", la.out, "Output path (stdout if omitted)");
    lab->add_option("--graph", la.graph, "Edge list (materialize)");
    lab->add_option("--blocks", la.blocks, "Decomposition file (materialize, repeatable)");
    lab->add_option("--eta", la.eta, "Weight of the link matrix (materialize)");
    lab->add_option("--mu", la.mus, "Weight per decomposition (materialize)");
    lab->add_option("--teleport", la.teleport, "Teleport spec (materialize)");
    lab->add_option("--dangling", la.dangling, "Dangling spec (materialize)");

    ExperimentArgs ea;
    auto* exp = app.add_subcommand("experiment", "Perturbation experiments");
    exp->add_option("--kind", ea.kind, "spam | sparsity | newpages")->required();
    exp->add_option("--graph", ea.graph, "Edge list");
    exp->add_option("--blocks", ea.blocks, "Decomposition file (repeatable)");
    exp->add_option("--synthetic", ea.synthetic, "Generate a block graph with this many nodes instead of --graph");
    exp->add_option("--synthetic-blocks", ea.synthetic_blocks, "Block count for --synthetic");
    exp->add_option("--synthetic-communities", ea.synthetic_communities, "Weakly linked communities for --synthetic");
    exp->add_option("--methods", ea.methods, "ncdawarerank | ncdawarerank-strong | pagerank | pagerank-ncd")
        ->delimiter(',');
    exp->add_option("--levels", ea.levels, "Perturbation levels (satellite counts, keep or remove fractions)")
        ->delimiter(',');
    exp->add_option("--node-fraction", ea.node_fraction, "Share of nodes treated as new (newpages)");
    exp->add_option("--eta", ea.eta, "NCDawareRank eta");
    exp->add_option("--mu", ea.mu, "NCDawareRank mu (split across decompositions)");
    exp->add_option("--alpha", ea.alpha, "PageRank damping");
    exp->add_option("--seed", ea.seed, "RNG seed");
    exp->add_option("--reps", ea.reps, "Repetitions");
    exp->add_option("--out", ea.out, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (*rank) return cmd_rank(ra, args);
        if (*check) return cmd_check(ca);
        if (*lab) return cmd_lab(la);
        if (*exp) return cmd_experiment(ea);
    } catch (const Exit& e) {
        std::cerr << "ncdrank: " << e.message << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "ncdrank: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
