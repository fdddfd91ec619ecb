#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ncdrank/decomposition.hpp"
#include "ncdrank/graph.hpp"
#include "ncdrank/ranking.hpp"

// Dense desk-scale Markov chain tools. Matrices are row-stochastic and
// vectors are row distributions stored as Eigen column vectors.

namespace ncd::lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Clusters as contiguous ranges over a state order. `order[p]` is the
/// original state placed at position p (identity when empty).
struct StatePartition {
    std::vector<std::size_t> starts;  // size L+1, starts[0] = 0, starts[L] = n
    std::vector<std::size_t> order;

    std::size_t cluster_count() const noexcept { return starts.empty() ? 0 : starts.size() - 1; }
    std::size_t cluster_size(std::size_t i) const { return starts[i + 1] - starts[i]; }
    std::size_t state_count() const noexcept { return starts.empty() ? 0 : starts.back(); }

    /// Contiguous clusters of the given sizes in the original order.
    static StatePartition from_sizes(std::span<const std::size_t> sizes);
    /// Arbitrary groups; each state of 0..n-1 must appear exactly once.
    static StatePartition from_groups(const std::vector<std::vector<std::size_t>>& groups);

    /// Throws InvalidArgument unless the partition fits an n-state chain.
    void validate(std::size_t n) const;
};

/// "3,2,3" (sizes) or "0 1 2;3 4;5 6 7" (groups; ',' or blanks inside a group).
StatePartition parse_partition(const std::string& text);

/// Checks squareness, finiteness, entries >= -1e-14 and row sums 1 +- 1e-10.
void validate_stochastic(const Matrix& P);

/// pi^T = 1^T (P + 11^T - I)^{-1}, full-pivot LU. Throws NumericError when singular.
Vector stationary_dense(const Matrix& P);

/// Maximum over rows of the probability leaving the row's own cluster.
double coupling_degree(const Matrix& P, const StatePartition& part);

struct DiagonalAbsorption {};
struct ProportionalAdjustment {};
/// Caller-provided stochastic diagonal blocks, one per cluster.
struct SuppliedBlocks {
    std::vector<Matrix> blocks;
};
using StochasticityAdjustment = std::variant<DiagonalAbsorption, ProportionalAdjustment, SuppliedBlocks>;

struct NcdApproximation {
    Vector pi_tilde;  // original state order
    Vector xi;
    Matrix coupling;
    std::vector<Matrix> adjusted_blocks;
    std::vector<Vector> block_distributions;
};

/// Block-wise approximation of a nearly decomposable chain: make each
/// diagonal block stochastic, solve it, couple the blocks, combine.
NcdApproximation ncd_approximate(const Matrix& P, const StatePartition& part,
                                 const StochasticityAdjustment& adjustment = DiagonalAbsorption{});

/// S_I = P_II + P_I* (I - P_*)^{-1} P_*I for cluster I (in cluster order).
Matrix stochastic_complement(const Matrix& P, const StatePartition& part, std::size_t I);

struct Complementation {
    Vector pi;  // original state order
    Vector xi;
    Matrix coupling;
    std::vector<Matrix> complements;
    std::vector<Vector> complement_distributions;
};

/// Exact stationary vector by aggregation of the stochastic complements.
Complementation exact_via_complementation(const Matrix& P, const StatePartition& part);

/// Coupling matrix C_IJ = s_I^T P_IJ 1 for given per-cluster distributions.
Matrix coupling_matrix(const Matrix& P, const StatePartition& part, std::span<const Vector> distributions);

/// Dense P built entry by entry from the model definition.
Matrix materialize_P(const SparseGraph& g, std::span<const Decomposition> decomps, const RankingConfig& cfg,
                     std::size_t cap = 5000);

Matrix read_csv(std::istream& in);
Matrix read_csv_file(const std::string& path);
/// Square diagonal blocks stacked row-wise in cluster order (row widths vary).
std::vector<Matrix> read_stacked_blocks(std::istream& in, const StatePartition& part);
std::vector<Matrix> read_stacked_blocks_file(const std::string& path, const StatePartition& part);
void write_csv(std::ostream& out, const Matrix& m);
void write_csv(std::ostream& out, const Vector& v);

/// Rows and columns of P in the partition's state order.
Matrix reorder(const Matrix& P, const StatePartition& part);

}  // namespace ncd::lab
