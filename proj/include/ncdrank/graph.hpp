#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ncd {

using NodeId = std::uint32_t;

/// Bijection between external string labels and dense ids 0..size()-1.
class LabelMap {
public:
    /// Id of `label`, assigning the next free id on first sight.
    NodeId intern(std::string_view label);
    std::optional<NodeId> find(std::string_view label) const;
    const std::string& label(NodeId id) const { return labels_[id]; }
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Labels "0".."n-1".
    static LabelMap numeric(std::size_t n);

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> ids_;
};

/// Read-only CSR adjacency view; what the connectivity routines consume.
struct AdjacencyView {
    std::span<const std::size_t> offsets;  // size n+1
    std::span<const NodeId> targets;

    std::size_t node_count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
    std::span<const NodeId> neighbors(std::size_t u) const {
        return targets.subspan(offsets[u], offsets[u + 1] - offsets[u]);
    }
};

/// Reverse adjacency: for each node, the sources of its incoming edges.
struct InAdjacency {
    std::vector<std::size_t> offsets;
    std::vector<NodeId> sources;
};

/// Unweighted directed graph in compressed form. Immutable once built, so it
/// can be shared read-only between workers; the reverse adjacency is built
/// lazily under a once-flag.
class SparseGraph {
public:
    SparseGraph();

    /// Builds from an edge list; duplicate (u,v) pairs collapse, self-loops stay.
    /// Missing labels default to the numeric map.
    static SparseGraph from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges,
                                  std::optional<LabelMap> labels = std::nullopt);

    std::size_t node_count() const noexcept { return n_; }
    std::size_t edge_count() const noexcept { return targets_.size(); }

    std::size_t out_degree(NodeId u) const { return offsets_[u + 1] - offsets_[u]; }
    std::span<const NodeId> out_neighbors(NodeId u) const {
        return {targets_.data() + offsets_[u], out_degree(u)};
    }
    bool has_edge(NodeId u, NodeId v) const;

    bool is_dangling(NodeId u) const { return dangling_[u]; }
    const std::vector<bool>& dangling_mask() const noexcept { return dangling_; }
    std::vector<NodeId> dangling_nodes() const;
    std::size_t dangling_count() const noexcept { return dangling_count_; }

    std::span<const std::size_t> out_offsets() const noexcept { return offsets_; }
    std::span<const NodeId> out_targets() const noexcept { return targets_; }
    AdjacencyView view() const noexcept { return {offsets_, targets_}; }

    const InAdjacency& in_adjacency() const;
    AdjacencyView reverse_view() const {
        const auto& in = in_adjacency();
        return {in.offsets, in.sources};
    }

    const LabelMap& labels() const noexcept { return labels_; }

    /// All edges in (source, target) order.
    std::vector<std::pair<NodeId, NodeId>> edges() const;

private:
    struct LazyReverse {
        std::once_flag once;
        InAdjacency in;
    };

    std::size_t n_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> targets_;
    std::vector<bool> dangling_;
    std::size_t dangling_count_ = 0;
    LabelMap labels_;
    std::shared_ptr<LazyReverse> reverse_;
};

struct EdgeListOptions {
    char comment_prefix = '#';
    /// When set, fields are split on this single character instead of whitespace runs.
    std::optional<char> delimiter;
};

/// Parses "source target" lines. Throws ParseError with the offending line
/// number on malformed lines and on input with no edges.
SparseGraph load_edge_list(std::istream& in, const EdgeListOptions& options = {});
SparseGraph load_edge_list_file(const std::string& path, const EdgeListOptions& options = {});

/// Writes one "source<TAB>target" line per edge using the graph's labels.
void write_edge_list(std::ostream& out, const SparseGraph& g);

struct ComponentLabeling {
    std::vector<std::uint32_t> component_of;
    std::size_t component_count = 0;
    std::vector<std::size_t> component_sizes;

    std::vector<std::vector<NodeId>> members() const;
};

/// Tarjan's algorithm, iterative. Components are numbered in the order they
/// are completed (reverse topological order of the condensation).
ComponentLabeling strongly_connected_components(const AdjacencyView& adj);
inline ComponentLabeling strongly_connected_components(const SparseGraph& g) {
    return strongly_connected_components(g.view());
}

/// Union-find over edges ignoring direction. Components are numbered by their
/// smallest member.
ComponentLabeling weakly_connected_components(const SparseGraph& g);

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n);
    std::size_t find(std::size_t x);
    bool unite(std::size_t a, std::size_t b);
    /// Contiguous labels, numbered by smallest member.
    ComponentLabeling labeling();

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

}  // namespace ncd
