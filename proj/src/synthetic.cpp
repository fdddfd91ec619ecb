#include "ncdrank/synthetic.hpp"

#include <cmath>
#include <vector>

#include "ncdrank/error.hpp"
#include "ncdrank/random.hpp"

namespace ncd {

BlockGraph generate_block_graph(const BlockGraphParams& p) {
    if (p.nodes == 0 || p.communities == 0 || p.communities > p.nodes) throw InvalidArgument("bad community count");
    if (p.blocks < p.communities || p.blocks > p.nodes) throw InvalidArgument("need communities <= blocks <= nodes");
    if (p.min_out == 0 || p.max_out < p.min_out) throw InvalidArgument("need 1 <= min_out <= max_out");
    if (p.dangling_fraction < 0.0 || p.dangling_fraction >= 1.0) throw InvalidArgument("dangling_fraction must be in [0, 1)");

    SeededRng rng(p.seed);
    const auto n = p.nodes;
    const auto C = p.communities;

    std::vector<std::size_t> comm_lo(C + 1);
    for (std::size_t c = 0; c <= C; ++c) comm_lo[c] = c * n / C;

    std::vector<BlockId> block_of(n);
    std::vector<std::vector<NodeId>> members;
    for (std::size_t c = 0; c < C; ++c) {
        const auto lo = comm_lo[c], hi = comm_lo[c + 1];
        auto nb = p.blocks / C + (c < p.blocks % C ? 1 : 0);
        nb = std::min(nb, hi - lo);
        const auto first = static_cast<BlockId>(members.size());
        members.resize(members.size() + nb);
        for (auto u = lo; u < hi; ++u) {
            // The first nb nodes seed one block each so none is empty.
            const auto b = first + static_cast<BlockId>(u - lo < nb ? u - lo : rng.below(nb));
            block_of[u] = b;
            members[b].push_back(static_cast<NodeId>(u));
        }
    }

    std::vector<char> dangling(n, 0);
    const auto n_dangling = static_cast<std::size_t>(std::llround(p.dangling_fraction * static_cast<double>(n)));
    for (auto u : rng.sample(n, n_dangling)) dangling[u] = 1;

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t c = 0; c < C; ++c) {
        const auto lo = comm_lo[c], hi = comm_lo[c + 1];
        for (auto u = lo; u < hi; ++u) {
            if (dangling[u]) continue;
            const auto deg = p.min_out + rng.below(p.max_out - p.min_out + 1);
            const auto& own = members[block_of[u]];
            for (std::size_t e = 0; e < deg; ++e) {
                NodeId w;
                if (rng.uniform01() < p.intra_block)
                    w = own[rng.below(own.size())];
                else
                    w = static_cast<NodeId>(lo + rng.below(hi - lo));
                edges.emplace_back(static_cast<NodeId>(u), w);
            }
        }
    }

    BlockGraph out{SparseGraph::from_edges(n, std::move(edges)), Decomposition::from_assignment(block_of)};
    return out;
}

}  // namespace ncd
