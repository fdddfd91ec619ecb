#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncdrank/csr.hpp"
#include "ncdrank/graph.hpp"

namespace ncd {

using BlockId = std::uint32_t;

/// Indexed family of non-empty, possibly overlapping node blocks that covers
/// every node of the graph it was built for.
class Decomposition {
public:
    Decomposition() = default;

    /// Builds from (node, block) membership pairs. Duplicate pairs are ignored.
    /// Throws InvalidArgument if some node in 0..n-1 belongs to no block, or a
    /// block id in 0..block_count-1 has no member.
    static Decomposition from_membership(std::size_t n, std::size_t block_count,
                                         std::vector<std::pair<NodeId, BlockId>> membership,
                                         std::vector<std::string> block_labels = {});

    /// Partition from a per-node block id.
    static Decomposition from_assignment(std::span<const BlockId> block_of);

    std::size_t node_count() const noexcept { return blocks_of_.size(); }
    std::size_t block_count() const noexcept { return blocks_.size(); }
    std::span<const NodeId> block(BlockId k) const { return blocks_[k]; }
    std::size_t block_size(BlockId k) const { return blocks_[k].size(); }
    std::span<const BlockId> blocks_of(NodeId u) const { return blocks_of_[u]; }
    const std::string& block_label(BlockId k) const { return block_labels_[k]; }
    bool is_partition() const noexcept { return partition_; }

private:
    std::vector<std::vector<NodeId>> blocks_;
    std::vector<std::vector<BlockId>> blocks_of_;
    std::vector<std::string> block_labels_;
    bool partition_ = true;
};

/// Reads "node_label block_label" lines. Node labels must exist in `g`.
Decomposition load_decomposition(std::istream& in, const SparseGraph& g);
Decomposition load_decomposition_file(const std::string& path, const SparseGraph& g);
void write_decomposition(std::ostream& out, const Decomposition& d, const SparseGraph& g);

/// Partition by URL host: "scheme://host/path" groups under "host"; labels
/// without a scheme group by the text before the first '/'.
Decomposition decomposition_from_url_hosts(const SparseGraph& g);

/// Per-node proximal block sets (blocks containing u or any out-neighbour of u).
struct ProximalStructure {
    std::vector<std::vector<BlockId>> proximal_blocks;

    std::size_t count(NodeId u) const { return proximal_blocks[u].size(); }
};

ProximalStructure proximal_sets(const SparseGraph& g, const Decomposition& d);

/// Sparse factors of the inter-level proximity matrix M = R*A.
/// R is n x K (row u uniform over its proximal blocks); A is K x n (row k
/// uniform over the members of block k).
struct ProximityFactors {
    CsrMatrix R;
    CsrMatrix A;

    std::size_t node_count() const noexcept { return R.rows; }
    std::size_t block_count() const noexcept { return A.rows; }
};

ProximityFactors build_factors(const ProximalStructure& p, const Decomposition& d);

/// Convenience: proximal_sets + build_factors.
ProximityFactors build_factors(const SparseGraph& g, const Decomposition& d);

/// Row u of M as sorted (column, value) pairs, computed as R_u * A.
std::vector<std::pair<NodeId, double>> inter_level_row(NodeId u, const ProximityFactors& f);

/// W = A*R (or the stacked version for several decompositions).
struct IndicatorMatrix {
    CsrMatrix W;
    bool diagonal_positive = false;

    std::size_t order() const noexcept { return W.rows; }
};

IndicatorMatrix indicator_matrix(const ProximityFactors& f);

/// [A_1; ...; A_S] * [R_1 ... R_S]. Scalar weights are omitted; only the
/// pattern matters for irreducibility.
IndicatorMatrix stacked_indicator(std::span<const ProximityFactors> fs);

struct PrimitivityVerdict {
    bool primitive = false;
    /// SCC labeling of the indicator pattern; more than one component means reducible.
    ComponentLabeling witness;
};

/// Primitive iff the pattern of W is a single strongly connected component
/// (W always has a positive diagonal, so irreducible implies aperiodic).
PrimitivityVerdict check_primitivity_single(const IndicatorMatrix& w);

struct SufficientConditionVerdict {
    enum class Kind { ConditionI, ConditionII, Inconclusive };
    Kind kind = Kind::Inconclusive;
    std::size_t first = 0;   // I
    std::size_t second = 0;  // J (condition ii only)
};

/// Checks, in order: some W_I = A_I R_I irreducible; then some A_I R_J
/// (I != J) strictly positive. Both are sufficient only.
SufficientConditionVerdict check_sufficient_conditions(std::span<const ProximityFactors> fs);

const char* to_string(SufficientConditionVerdict::Kind k);

}  // namespace ncd
