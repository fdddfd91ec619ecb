#include "ncdrank/decomposition.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "ncdrank/error.hpp"
#include "text_util.hpp"

namespace ncd {

Decomposition Decomposition::from_membership(std::size_t n, std::size_t block_count,
                                             std::vector<std::pair<NodeId, BlockId>> membership,
                                             std::vector<std::string> block_labels) {
    std::sort(membership.begin(), membership.end());
    membership.erase(std::unique(membership.begin(), membership.end()), membership.end());

    Decomposition d;
    d.blocks_.resize(block_count);
    d.blocks_of_.resize(n);
    for (const auto& [u, k] : membership) {
        if (u >= n) throw InvalidArgument("membership node out of range");
        if (k >= block_count) throw InvalidArgument("membership block out of range");
        d.blocks_of_[u].push_back(k);  // sorted: membership is sorted by (u, k)
        d.blocks_[k].push_back(u);
    }
    for (std::size_t k = 0; k < block_count; ++k) {
        if (d.blocks_[k].empty()) throw InvalidArgument("block " + std::to_string(k) + " is empty");
        std::sort(d.blocks_[k].begin(), d.blocks_[k].end());
    }
    for (std::size_t u = 0; u < n; ++u) {
        if (d.blocks_of_[u].empty())
            throw InvalidArgument("cover violated: node " + std::to_string(u) + " belongs to no block");
        if (d.blocks_of_[u].size() > 1) d.partition_ = false;
    }
    if (block_labels.empty()) {
        for (std::size_t k = 0; k < block_count; ++k) block_labels.push_back(std::to_string(k));
    } else if (block_labels.size() != block_count) {
        throw InvalidArgument("block label count differs from block count");
    }
    d.block_labels_ = std::move(block_labels);
    return d;
}

Decomposition Decomposition::from_assignment(std::span<const BlockId> block_of) {
    std::vector<std::pair<NodeId, BlockId>> membership;
    membership.reserve(block_of.size());
    BlockId k_max = 0;
    for (std::size_t u = 0; u < block_of.size(); ++u) {
        membership.emplace_back(static_cast<NodeId>(u), block_of[u]);
        k_max = std::max(k_max, block_of[u]);
    }
    return from_membership(block_of.size(), block_of.empty() ? 0 : k_max + 1, std::move(membership));
}

Decomposition load_decomposition(std::istream& in, const SparseGraph& g) {
    std::unordered_map<std::string, BlockId> block_ids;
    std::vector<std::string> block_labels;
    std::vector<std::pair<NodeId, BlockId>> membership;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line, '#', std::nullopt);
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw ParseError("expected 2 fields (node block), got " + std::to_string(fields.size()), lineno);
        auto node = g.labels().find(fields[0]);
        if (!node) throw ParseError("unknown node label '" + std::string(fields[0]) + "'", lineno);
        auto [it, inserted] = block_ids.try_emplace(std::string(fields[1]), static_cast<BlockId>(block_labels.size()));
        if (inserted) block_labels.emplace_back(fields[1]);
        membership.emplace_back(*node, it->second);
    }
    if (membership.empty()) throw ParseError("decomposition is empty", 0);

    std::vector<char> covered(g.node_count(), 0);
    for (const auto& [u, k] : membership) covered[u] = 1;
    for (std::size_t u = 0; u < covered.size(); ++u)
        if (!covered[u])
            throw InvalidArgument("cover violated: node '" + g.labels().label(static_cast<NodeId>(u)) +
                                  "' belongs to no block");
    const auto k = block_labels.size();
    return Decomposition::from_membership(g.node_count(), k, std::move(membership), std::move(block_labels));
}

Decomposition load_decomposition_file(const std::string& path, const SparseGraph& g) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open decomposition file: " + path);
    return load_decomposition(f, g);
}

void write_decomposition(std::ostream& out, const Decomposition& d, const SparseGraph& g) {
    for (std::size_t u = 0; u < d.node_count(); ++u)
        for (auto k : d.blocks_of(static_cast<NodeId>(u)))
            out << g.labels().label(static_cast<NodeId>(u)) << '\t' << d.block_label(k) << '\n';
}

Decomposition decomposition_from_url_hosts(const SparseGraph& g) {
    std::unordered_map<std::string, BlockId> ids;
    std::vector<std::string> labels;
    std::vector<BlockId> block_of(g.node_count());
    for (std::size_t u = 0; u < g.node_count(); ++u) {
        std::string_view s = g.labels().label(static_cast<NodeId>(u));
        if (auto scheme = s.find("://"); scheme != std::string_view::npos) s.remove_prefix(scheme + 3);
        auto host = s.substr(0, s.find('/'));
        auto [it, inserted] = ids.try_emplace(std::string(host), static_cast<BlockId>(labels.size()));
        if (inserted) labels.emplace_back(host);
        block_of[u] = it->second;
    }
    std::vector<std::pair<NodeId, BlockId>> membership;
    for (std::size_t u = 0; u < block_of.size(); ++u) membership.emplace_back(static_cast<NodeId>(u), block_of[u]);
    const auto k = labels.size();
    return Decomposition::from_membership(g.node_count(), k, std::move(membership), std::move(labels));
}

ProximalStructure proximal_sets(const SparseGraph& g, const Decomposition& d) {
    if (g.node_count() != d.node_count()) throw InvalidArgument("decomposition and graph sizes differ");
    ProximalStructure p;
    p.proximal_blocks.resize(g.node_count());
    for (std::size_t u = 0; u < g.node_count(); ++u) {
        auto& set = p.proximal_blocks[u];
        auto own = d.blocks_of(static_cast<NodeId>(u));
        set.assign(own.begin(), own.end());
        for (auto w : g.out_neighbors(static_cast<NodeId>(u))) {
            auto theirs = d.blocks_of(w);
            set.insert(set.end(), theirs.begin(), theirs.end());
        }
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    return p;
}

ProximityFactors build_factors(const ProximalStructure& p, const Decomposition& d) {
    const auto n = p.proximal_blocks.size();
    const auto k = d.block_count();
    if (n != d.node_count()) throw InvalidArgument("proximal structure and decomposition sizes differ");

    ProximityFactors f;
    f.R.rows = n;
    f.R.cols = k;
    f.R.offsets.reserve(n + 1);
    for (std::size_t u = 0; u < n; ++u) {
        const auto& blocks = p.proximal_blocks[u];
        const double w = 1.0 / static_cast<double>(blocks.size());
        for (auto b : blocks) {
            f.R.indices.push_back(b);
            f.R.values.push_back(w);
        }
        f.R.offsets.push_back(f.R.indices.size());
    }

    f.A.rows = k;
    f.A.cols = n;
    f.A.offsets.reserve(k + 1);
    for (BlockId b = 0; b < k; ++b) {
        auto members = d.block(b);
        const double w = 1.0 / static_cast<double>(members.size());
        for (auto v : members) {
            f.A.indices.push_back(v);
            f.A.values.push_back(w);
        }
        f.A.offsets.push_back(f.A.indices.size());
    }
    return f;
}

ProximityFactors build_factors(const SparseGraph& g, const Decomposition& d) {
    return build_factors(proximal_sets(g, d), d);
}

std::vector<std::pair<NodeId, double>> inter_level_row(NodeId u, const ProximityFactors& f) {
    if (u >= f.R.rows) throw InvalidArgument("inter_level_row: node out of range");
    std::vector<std::pair<NodeId, double>> row;
    auto blocks = f.R.row_indices(u);
    auto weights = f.R.row_values(u);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto members = f.A.row_indices(blocks[i]);
        auto values = f.A.row_values(blocks[i]);
        for (std::size_t j = 0; j < members.size(); ++j) row.emplace_back(members[j], weights[i] * values[j]);
    }
    std::sort(row.begin(), row.end());
    // Merge contributions from overlapping blocks.
    std::vector<std::pair<NodeId, double>> merged;
    for (const auto& [v, x] : row) {
        if (!merged.empty() && merged.back().first == v)
            merged.back().second += x;
        else
            merged.emplace_back(v, x);
    }
    return merged;
}

namespace {

bool has_positive_diagonal(const CsrMatrix& w) {
    for (std::size_t i = 0; i < w.rows; ++i)
        if (!(w.at(i, i) > 0.0)) return false;
    return true;
}

}  // namespace

IndicatorMatrix indicator_matrix(const ProximityFactors& f) {
    IndicatorMatrix out;
    out.W = multiply(f.A, f.R);
    out.diagonal_positive = has_positive_diagonal(out.W);
    return out;
}

IndicatorMatrix stacked_indicator(std::span<const ProximityFactors> fs) {
    if (fs.empty()) throw InvalidArgument("stacked_indicator: no decompositions");
    const auto n = fs.front().node_count();
    std::size_t total = 0;
    for (const auto& f : fs) {
        if (f.node_count() != n || f.A.cols != n) throw InvalidArgument("stacked_indicator: node sets differ");
        total += f.block_count();
    }
    // Vertical stack of the A factors and horizontal stack of the R factors.
    CsrMatrix a_stack;
    a_stack.rows = total;
    a_stack.cols = n;
    for (const auto& f : fs) {
        for (std::size_t r = 0; r < f.A.rows; ++r) {
            auto idx = f.A.row_indices(r);
            auto val = f.A.row_values(r);
            a_stack.indices.insert(a_stack.indices.end(), idx.begin(), idx.end());
            a_stack.values.insert(a_stack.values.end(), val.begin(), val.end());
            a_stack.offsets.push_back(a_stack.indices.size());
        }
    }
    CsrMatrix r_stack;
    r_stack.rows = n;
    r_stack.cols = total;
    for (std::size_t u = 0; u < n; ++u) {
        std::uint32_t shift = 0;
        for (const auto& f : fs) {
            auto idx = f.R.row_indices(u);
            auto val = f.R.row_values(u);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                r_stack.indices.push_back(idx[i] + shift);
                r_stack.values.push_back(val[i]);
            }
            shift += static_cast<std::uint32_t>(f.block_count());
        }
        r_stack.offsets.push_back(r_stack.indices.size());
    }
    IndicatorMatrix out;
    out.W = multiply(a_stack, r_stack);
    out.diagonal_positive = has_positive_diagonal(out.W);
    return out;
}

PrimitivityVerdict check_primitivity_single(const IndicatorMatrix& w) {
    if (!w.diagonal_positive) throw InvalidArgument("indicator matrix must have a positive diagonal");
    PrimitivityVerdict v;
    // Explicit zeros would not be edges; W is built from products of
    // positive entries so every stored value is positive.
    v.witness = strongly_connected_components(AdjacencyView{w.W.offsets, w.W.indices});
    v.primitive = v.witness.component_count == 1;
    return v;
}

SufficientConditionVerdict check_sufficient_conditions(std::span<const ProximityFactors> fs) {
    SufficientConditionVerdict out;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (check_primitivity_single(indicator_matrix(fs[i])).primitive) {
            out.kind = SufficientConditionVerdict::Kind::ConditionI;
            out.first = i;
            return out;
        }
    }
    for (std::size_t i = 0; i < fs.size(); ++i) {
        for (std::size_t j = 0; j < fs.size(); ++j) {
            if (i == j) continue;
            if (fs[i].A.cols != fs[j].R.rows) throw InvalidArgument("check_sufficient_conditions: node sets differ");
            auto prod = multiply(fs[i].A, fs[j].R);
            if (prod.nnz() == prod.rows * prod.cols) {
                out.kind = SufficientConditionVerdict::Kind::ConditionII;
                out.first = i;
                out.second = j;
                return out;
            }
        }
    }
    return out;
}

const char* to_string(SufficientConditionVerdict::Kind k) {
    switch (k) {
        case SufficientConditionVerdict::Kind::ConditionI: return "i";
        case SufficientConditionVerdict::Kind::ConditionII: return "ii";
        case SufficientConditionVerdict::Kind::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

}  // namespace ncd
