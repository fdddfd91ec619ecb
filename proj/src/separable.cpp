#include "ncdrank/separable.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>

#include "ncdrank/error.hpp"
#include "ncdrank/kernels.hpp"

namespace ncd {

std::vector<std::size_t> AggregatePartition::sizes() const {
    std::vector<std::size_t> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.size());
    return out;
}

namespace {

AggregatePartition partition_from_labeling(const ComponentLabeling& lab, std::span<const Decomposition> decomps) {
    AggregatePartition p;
    p.L = lab.component_count;
    p.aggregate_of_node = lab.component_of;
    p.members = lab.members();
    for (const auto& d : decomps) {
        std::vector<std::uint32_t> of_block(d.block_count());
        for (BlockId k = 0; k < d.block_count(); ++k) of_block[k] = p.aggregate_of_node[d.block(k).front()];
        p.aggregate_of_block.push_back(std::move(of_block));
    }
    return p;
}

/// First dangling node whose patch (a single distribution shared by all
/// dangling nodes) has support outside the node's aggregate.
std::optional<NotSeparable> shared_patch_crossing(const SparseGraph& g, std::span<const std::uint32_t> agg,
                                                  std::span<const double> patch) {
    if (g.dangling_count() == 0) return std::nullopt;
    std::optional<NodeId> first;
    std::optional<NodeId> other;
    for (std::size_t j = 0; j < patch.size(); ++j) {
        if (patch[j] <= 0.0) continue;
        if (!first) {
            first = static_cast<NodeId>(j);
        } else if (agg[j] != agg[*first]) {
            other = static_cast<NodeId>(j);
            break;
        }
    }
    if (!first) return std::nullopt;
    for (auto u : g.dangling_nodes()) {
        if (agg[u] != agg[*first]) return NotSeparable{u, *first};
        if (other) return NotSeparable{u, *other};
    }
    return std::nullopt;
}

std::optional<NotSeparable> ncd_patch_crossing(const SparseGraph& g, std::span<const std::uint32_t> agg,
                                               const Decomposition& d) {
    for (auto u : g.dangling_nodes())
        for (auto k : d.blocks_of(u))
            for (auto w : d.block(k))
                if (agg[w] != agg[u]) return NotSeparable{u, w};
    return std::nullopt;
}

std::optional<NotSeparable> patch_crossing(const SparseGraph& g, std::span<const std::uint32_t> agg,
                                           const DanglingStrategy& dangling, std::span<const double> v,
                                           std::span<const Decomposition> decomps) {
    if (std::holds_alternative<StronglyPreferential>(dangling)) return shared_patch_crossing(g, agg, v);
    if (const auto* w = std::get_if<WeaklyPreferential>(&dangling)) return shared_patch_crossing(g, agg, w->f);
    return ncd_patch_crossing(g, agg, decomps[std::get<NcdAwareDangling>(dangling).decomposition]);
}

struct SubModel {
    SparseGraph graph;
    std::vector<Decomposition> decomps;
};

SubModel induce(const SparseGraph& g, std::span<const Decomposition> decomps, std::span<const NodeId> members,
                std::span<const std::uint32_t> local) {
    LabelMap labels;
    for (auto u : members) labels.intern(g.labels().label(u));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (auto u : members)
        for (auto w : g.out_neighbors(u)) edges.emplace_back(local[u], local[w]);
    SubModel sub{SparseGraph::from_edges(members.size(), std::move(edges), std::move(labels)), {}};

    for (const auto& d : decomps) {
        // Blocks restricted to the aggregate; blocks that miss it are dropped.
        std::vector<BlockId> remap(d.block_count(), static_cast<BlockId>(-1));
        std::vector<std::string> block_labels;
        std::vector<std::pair<NodeId, BlockId>> membership;
        for (auto u : members) {
            for (auto k : d.blocks_of(u)) {
                if (remap[k] == static_cast<BlockId>(-1)) {
                    remap[k] = static_cast<BlockId>(block_labels.size());
                    block_labels.push_back(d.block_label(k));
                }
                membership.emplace_back(local[u], remap[k]);
            }
        }
        // Local block ids follow first appearance; from_membership wants dense ids only.
        const auto kcount = block_labels.size();
        sub.decomps.push_back(
            Decomposition::from_membership(members.size(), kcount, std::move(membership), std::move(block_labels)));
    }
    return sub;
}

SeparableSolution solve_partitioned(const SparseGraph& g, std::span<const Decomposition> decomps,
                                    const RankingConfig& cfg, AggregatePartition part, std::span<const double> v) {
    const auto n = g.node_count();
    SeparableSolution sol;
    sol.xi = coupling_solution(part, v);
    for (std::size_t i = 0; i < part.L; ++i)
        if (!(sol.xi[i] > 0.0))
            throw InvalidArgument("aggregate " + std::to_string(i) +
                                  " has zero teleport mass; its submodel teleport vector is undefined");

    std::vector<std::uint32_t> local(n);
    for (const auto& m : part.members)
        for (std::size_t j = 0; j < m.size(); ++j) local[m[j]] = static_cast<std::uint32_t>(j);

    std::vector<std::size_t> order(part.L);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return part.members[a].size() > part.members[b].size(); });

    sol.sub_vectors.resize(part.L);
    sol.sub_iterations.resize(part.L);
    std::vector<RankVector> results(part.L);
    std::vector<std::exception_ptr> failures(part.L);
    const int workers = kernels::resolve_workers(cfg.workers);
    const auto L = static_cast<std::ptrdiff_t>(part.L);

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (part.L > 1)
    for (std::ptrdiff_t t = 0; t < L; ++t) {
        const auto agg = order[static_cast<std::size_t>(t)];
        try {
            const auto& members = part.members[agg];
            auto sub = induce(g, decomps, members, local);
            RankingConfig sc = cfg;
            sc.workers = part.L > 1 ? 1 : cfg.workers;
            std::vector<double> vi;
            vi.reserve(members.size());
            for (auto u : members) vi.push_back(v[u] / sol.xi[agg]);
            sc.teleport = CustomTeleport{vi};
            if (const auto* w = std::get_if<WeaklyPreferential>(&cfg.dangling)) {
                std::vector<double> fi;
                double s = 0.0;
                for (auto u : members) {
                    fi.push_back(w->f[u]);
                    s += w->f[u];
                }
                if (s > 0.0) {
                    for (auto& x : fi) x /= s;
                    sc.dangling = WeaklyPreferential{std::move(fi)};
                } else {
                    // No dangling node lives here, so the patch is never used.
                    sc.dangling = StronglyPreferential{};
                }
            }
            std::vector<ProximityFactors> factors;
            for (const auto& d : sub.decomps) factors.push_back(build_factors(sub.graph, d));
            RankOperator op(sub.graph, std::move(factors), std::move(vi), sc);
            results[agg] = power_iterate(op);
        } catch (...) {
            failures[agg] = std::current_exception();
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    sol.rank.pi.assign(n, 0.0);
    sol.rank.converged = true;
    for (std::size_t i = 0; i < part.L; ++i) {
        const auto& r = results[i];
        for (std::size_t j = 0; j < part.members[i].size(); ++j) sol.rank.pi[part.members[i][j]] = sol.xi[i] * r.pi[j];
        sol.rank.iterations = std::max(sol.rank.iterations, r.iterations);
        sol.rank.final_residual = std::max(sol.rank.final_residual, r.final_residual);
        sol.rank.converged = sol.rank.converged && r.converged;
        sol.sub_vectors[i] = r.pi;
        sol.sub_iterations[i] = r.iterations;
    }
    sol.partition = std::move(part);
    return sol;
}

}  // namespace

AggregateDetection detect_aggregates(const SparseGraph& g, std::span<const Decomposition> decomps,
                                     const RankingConfig& cfg) {
    cfg.validate(decomps.size());
    UnionFind uf(g.node_count());
    for (const auto& [u, w] : g.edges()) uf.unite(u, w);
    for (const auto& d : decomps) {
        if (d.node_count() != g.node_count()) throw InvalidArgument("decomposition and graph sizes differ");
        for (BlockId k = 0; k < d.block_count(); ++k) {
            auto b = d.block(k);
            for (auto u : b) uf.unite(b.front(), u);
        }
    }
    auto part = partition_from_labeling(uf.labeling(), decomps);
    auto v = teleport_vector(cfg.teleport, g, decomps);
    if (auto witness = patch_crossing(g, part.aggregate_of_node, cfg.dangling, v, decomps)) return *witness;
    return part;
}

double coupling_bound(const RankingConfig& cfg) { return cfg.teleport_weight(); }

std::vector<double> coupling_solution(const AggregatePartition& part, std::span<const double> v) {
    std::vector<double> xi(part.L, 0.0);
    for (std::size_t u = 0; u < v.size(); ++u) xi[part.aggregate_of_node[u]] += v[u];
    return xi;
}

LumpabilityReport verify_lumpability(const SparseGraph& g, std::span<const Decomposition> decomps,
                                     const RankingConfig& cfg, const AggregatePartition& part, std::size_t max_rows,
                                     double tolerance) {
    std::vector<ProximityFactors> factors;
    for (const auto& d : decomps) factors.push_back(build_factors(g, d));
    auto v = teleport_vector(cfg.teleport, g, decomps);
    const auto xi = coupling_solution(part, v);
    RankOperator op(g, std::move(factors), v, cfg);

    const auto n = g.node_count();
    const double tau = cfg.teleport_weight();
    const double stay = cfg.eta + cfg.mu_total();
    const std::size_t stride = std::max<std::size_t>(1, (n + std::max<std::size_t>(max_rows, 1) - 1) / std::max<std::size_t>(max_rows, 1));

    LumpabilityReport rep;
    std::vector<double> e(n, 0.0), row(n);
    for (std::size_t i = 0; i < n; i += stride) {
        e[i] = 1.0;
        op.apply(e, row, false);
        e[i] = 0.0;
        std::vector<double> lumped(part.L, 0.0);
        for (std::size_t j = 0; j < n; ++j) lumped[part.aggregate_of_node[j]] += row[j];
        const auto home = part.aggregate_of_node[i];
        for (std::size_t l = 0; l < part.L; ++l) {
            const double expected = (l == home ? stay : 0.0) + tau * xi[l];
            rep.max_deviation = std::max(rep.max_deviation, std::abs(lumped[l] - expected));
        }
        ++rep.rows_checked;
    }
    rep.ok = rep.max_deviation <= tolerance;
    return rep;
}

SeparableSolution solve_separable(const SparseGraph& g, std::span<const Decomposition> decomps,
                                  const RankingConfig& cfg) {
    auto detected = detect_aggregates(g, decomps, cfg);
    if (const auto* ns = std::get_if<NotSeparable>(&detected))
        throw InvalidArgument("model is not block-level separable: dangling patch of '" + g.labels().label(ns->from) +
                              "' reaches '" + g.labels().label(ns->to) + "' in another aggregate");
    auto v = teleport_vector(cfg.teleport, g, decomps);
    return solve_partitioned(g, decomps, cfg, std::move(std::get<AggregatePartition>(detected)), v);
}

SeparableSolution pagerank_confined(const SparseGraph& g, double alpha, const TeleportSpec& teleport,
                                    const DanglingStrategy& dangling, std::span<const Decomposition> decomps,
                                    double tol, std::size_t max_iters, int workers) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    RankingConfig cfg;
    cfg.eta = alpha;
    cfg.teleport = teleport;
    cfg.dangling = dangling;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    cfg.workers = workers;
    const bool ncd = std::holds_alternative<NcdAwareDangling>(dangling);
    cfg.mus.assign(ncd ? decomps.size() : 0, 0.0);
    std::span<const Decomposition> model_decomps = ncd ? decomps : std::span<const Decomposition>{};
    cfg.validate(model_decomps.size());

    auto v = teleport_vector(teleport, g, decomps);
    auto part = partition_from_labeling(weakly_connected_components(g), model_decomps);
    if (auto c = patch_crossing(g, part.aggregate_of_node, dangling, v, decomps))
        throw InvalidArgument("dangling patch of '" + g.labels().label(c->from) + "' reaches '" +
                              g.labels().label(c->to) + "' outside its weakly connected component");
    return solve_partitioned(g, model_decomps, cfg, std::move(part), v);
}

}  // namespace ncd
