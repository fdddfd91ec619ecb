#pragma once

#include <cstddef>
#include <cstdint>

#include "ncdrank/decomposition.hpp"
#include "ncdrank/graph.hpp"

namespace ncd {

struct BlockGraphParams {
    std::size_t nodes = 1000;
    std::size_t blocks = 10;
    /// Nodes are split into this many equal communities; no edge or block
    /// crosses a community, so every community is its own aggregate.
    std::size_t communities = 1;
    std::size_t min_out = 1;
    std::size_t max_out = 10;
    /// Probability that an edge stays in the source's block.
    double intra_block = 0.8;
    /// Exact share of nodes left without out-links.
    double dangling_fraction = 0.2;
    std::uint64_t seed = 1;
};

struct BlockGraph {
    SparseGraph graph;
    Decomposition blocks;
};

/// Random directed graph with planted block structure. Node i of block b is
/// labelled by its id; blocks are non-empty partitions of each community.
BlockGraph generate_block_graph(const BlockGraphParams& params);

}  // namespace ncd
