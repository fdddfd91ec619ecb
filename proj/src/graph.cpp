#include "ncdrank/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "ncdrank/error.hpp"
#include "text_util.hpp"

namespace ncd {

NodeId LabelMap::intern(std::string_view label) {
    auto it = ids_.find(std::string(label));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<NodeId>(labels_.size());
    labels_.emplace_back(label);
    ids_.emplace(labels_.back(), id);
    return id;
}

std::optional<NodeId> LabelMap::find(std::string_view label) const {
    auto it = ids_.find(std::string(label));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

LabelMap LabelMap::numeric(std::size_t n) {
    LabelMap m;
    for (std::size_t i = 0; i < n; ++i) m.intern(std::to_string(i));
    return m;
}

SparseGraph::SparseGraph() : offsets_{0}, reverse_(std::make_shared<LazyReverse>()) {}

SparseGraph SparseGraph::from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges,
                                    std::optional<LabelMap> labels) {
    for (const auto& [u, v] : edges)
        if (u >= n || v >= n) throw InvalidArgument("edge endpoint out of range");
    if (labels && labels->size() != n) throw InvalidArgument("label map size differs from node count");

    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    SparseGraph g;
    g.n_ = n;
    g.offsets_.assign(n + 1, 0);
    g.targets_.reserve(edges.size());
    for (const auto& [u, v] : edges) {
        ++g.offsets_[u + 1];
        g.targets_.push_back(v);
    }
    for (std::size_t u = 0; u < n; ++u) g.offsets_[u + 1] += g.offsets_[u];
    g.dangling_.assign(n, false);
    for (std::size_t u = 0; u < n; ++u) {
        if (g.offsets_[u + 1] == g.offsets_[u]) {
            g.dangling_[u] = true;
            ++g.dangling_count_;
        }
    }
    g.labels_ = labels ? std::move(*labels) : LabelMap::numeric(n);
    return g;
}

bool SparseGraph::has_edge(NodeId u, NodeId v) const {
    auto nb = out_neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<NodeId> SparseGraph::dangling_nodes() const {
    std::vector<NodeId> out;
    out.reserve(dangling_count_);
    for (std::size_t u = 0; u < n_; ++u)
        if (dangling_[u]) out.push_back(static_cast<NodeId>(u));
    return out;
}

const InAdjacency& SparseGraph::in_adjacency() const {
    std::call_once(reverse_->once, [this] {
        auto& in = reverse_->in;
        in.offsets.assign(n_ + 1, 0);
        for (auto v : targets_) ++in.offsets[v + 1];
        for (std::size_t v = 0; v < n_; ++v) in.offsets[v + 1] += in.offsets[v];
        in.sources.resize(targets_.size());
        std::vector<std::size_t> cursor(in.offsets.begin(), in.offsets.end() - 1);
        for (std::size_t u = 0; u < n_; ++u)
            for (std::size_t e = offsets_[u]; e < offsets_[u + 1]; ++e)
                in.sources[cursor[targets_[e]]++] = static_cast<NodeId>(u);
    });
    return reverse_->in;
}

std::vector<std::pair<NodeId, NodeId>> SparseGraph::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(targets_.size());
    for (std::size_t u = 0; u < n_; ++u)
        for (std::size_t e = offsets_[u]; e < offsets_[u + 1]; ++e)
            out.emplace_back(static_cast<NodeId>(u), targets_[e]);
    return out;
}

SparseGraph load_edge_list(std::istream& in, const EdgeListOptions& options) {
    LabelMap labels;
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line, options.comment_prefix, options.delimiter);
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw ParseError("expected 2 fields (source target), got " + std::to_string(fields.size()),
                             lineno);
        const auto u = labels.intern(fields[0]);
        const auto v = labels.intern(fields[1]);
        edges.emplace_back(u, v);
    }
    if (edges.empty()) throw ParseError("edge list is empty", 0);
    const auto n = labels.size();
    return SparseGraph::from_edges(n, std::move(edges), std::move(labels));
}

SparseGraph load_edge_list_file(const std::string& path, const EdgeListOptions& options) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open graph file: " + path);
    return load_edge_list(f, options);
}

void write_edge_list(std::ostream& out, const SparseGraph& g) {
    const auto& labels = g.labels();
    for (const auto& [u, v] : g.edges()) out << labels.label(u) << '\t' << labels.label(v) << '\n';
}

std::vector<std::vector<NodeId>> ComponentLabeling::members() const {
    std::vector<std::vector<NodeId>> out(component_count);
    for (std::size_t u = 0; u < component_of.size(); ++u)
        out[component_of[u]].push_back(static_cast<NodeId>(u));
    return out;
}

ComponentLabeling strongly_connected_components(const AdjacencyView& adj) {
    const auto n = adj.node_count();
    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, kUnvisited), lowlink(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<NodeId> stack;
    // (node, next-edge cursor) frames replace recursion.
    std::vector<std::pair<NodeId, std::size_t>> frames;

    ComponentLabeling out;
    out.component_of.assign(n, 0);
    std::size_t next_index = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        frames.emplace_back(static_cast<NodeId>(root), adj.offsets[root]);
        index[root] = lowlink[root] = next_index++;
        stack.push_back(static_cast<NodeId>(root));
        on_stack[root] = 1;

        while (!frames.empty()) {
            auto& [u, cursor] = frames.back();
            if (cursor < adj.offsets[u + 1]) {
                const NodeId w = adj.targets[cursor++];
                if (index[w] == kUnvisited) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.emplace_back(w, adj.offsets[w]);
                } else if (on_stack[w]) {
                    lowlink[u] = std::min(lowlink[u], index[w]);
                }
                continue;
            }
            const NodeId done = u;
            frames.pop_back();
            if (!frames.empty()) {
                auto parent = frames.back().first;
                lowlink[parent] = std::min(lowlink[parent], lowlink[done]);
            }
            if (lowlink[done] == index[done]) {
                const auto comp = static_cast<std::uint32_t>(out.component_count++);
                std::size_t size = 0;
                NodeId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    out.component_of[w] = comp;
                    ++size;
                } while (w != done);
                out.component_sizes.push_back(size);
            }
        }
    }
    return out;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
}

std::size_t UnionFind::find(std::size_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
}

ComponentLabeling UnionFind::labeling() {
    const auto n = parent_.size();
    ComponentLabeling out;
    out.component_of.assign(n, 0);
    constexpr auto kNone = static_cast<std::uint32_t>(-1);
    std::vector<std::uint32_t> label_of_root(n, kNone);
    for (std::size_t u = 0; u < n; ++u) {
        auto r = find(u);
        if (label_of_root[r] == kNone) {
            label_of_root[r] = static_cast<std::uint32_t>(out.component_count++);
            out.component_sizes.push_back(0);
        }
        out.component_of[u] = label_of_root[r];
        ++out.component_sizes[label_of_root[r]];
    }
    return out;
}

ComponentLabeling weakly_connected_components(const SparseGraph& g) {
    UnionFind uf(g.node_count());
    for (const auto& [u, v] : g.edges()) uf.unite(u, v);
    return uf.labeling();
}

}  // namespace ncd
