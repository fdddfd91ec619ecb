#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ncdrank/decomposition.hpp"
#include "ncdrank/graph.hpp"
#include "ncdrank/ranking.hpp"

namespace ncd {

/// Partition of nodes (and of the blocks of every decomposition) into
/// aggregates with no effective-H edge between different aggregates.
struct AggregatePartition {
    std::size_t L = 0;
    std::vector<std::uint32_t> aggregate_of_node;
    /// aggregate_of_block[i][k]: aggregate of block k of decomposition i.
    std::vector<std::vector<std::uint32_t>> aggregate_of_block;
    std::vector<std::vector<NodeId>> members;

    std::vector<std::size_t> sizes() const;
};

/// A dangling patch that reaches outside the source's aggregate.
struct NotSeparable {
    NodeId from = 0;
    NodeId to = 0;
};

using AggregateDetection = std::variant<AggregatePartition, NotSeparable>;

/// Components of (undirected H edges) + (cliques over every block), then a
/// check that no dangling patch crosses components.
AggregateDetection detect_aggregates(const SparseGraph& g, std::span<const Decomposition> decomps,
                                     const RankingConfig& cfg);

/// 1 - eta - sum(mu): upper bound on the maximum degree of coupling.
double coupling_bound(const RankingConfig& cfg);

/// xi_I = sum of v over aggregate I.
std::vector<double> coupling_solution(const AggregatePartition& part, std::span<const double> v);

struct LumpabilityReport {
    std::size_t rows_checked = 0;
    double max_deviation = 0.0;
    bool ok = false;
};

/// Sums each sampled row of P over every aggregate (rows are obtained by
/// applying the operator to basis vectors) and compares with the closed
/// forms. At most `max_rows` rows, evenly strided.
LumpabilityReport verify_lumpability(const SparseGraph& g, std::span<const Decomposition> decomps,
                                     const RankingConfig& cfg, const AggregatePartition& part,
                                     std::size_t max_rows = 256, double tolerance = 1e-12);

struct SeparableSolution {
    RankVector rank;
    AggregatePartition partition;
    std::vector<double> xi;
    /// Stationary vector of each aggregate's submodel, in member order.
    std::vector<std::vector<double>> sub_vectors;
    std::vector<std::size_t> sub_iterations;
};

/// Solves each aggregate's submodel (same weights, teleport v_I / xi_I)
/// independently and concatenates xi_I * s_I. Throws InvalidArgument if the
/// model is not separable or an aggregate has zero teleport mass.
SeparableSolution solve_separable(const SparseGraph& g, std::span<const Decomposition> decomps,
                                  const RankingConfig& cfg);

/// PageRank solved per weakly connected component. The dangling patch must
/// stay inside each dangling node's component.
SeparableSolution pagerank_confined(const SparseGraph& g, double alpha, const TeleportSpec& teleport,
                                    const DanglingStrategy& dangling, std::span<const Decomposition> decomps = {},
                                    double tol = 1e-8, std::size_t max_iters = 1000, int workers = 0);

}  // namespace ncd
