#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ncdrank/decomposition.hpp"
#include "ncdrank/graph.hpp"
#include "ncdrank/ncdlab.hpp"
#include "ncdrank/random.hpp"
#include "ncdrank/synthetic.hpp"

namespace testing {

inline std::string fixture(const std::string& rel) { return std::string(NCD_FIXTURE_DIR) + "/" + rel; }

inline ncd::SparseGraph graph_from(const std::string& text) {
    std::istringstream in(text);
    return ncd::load_edge_list(in);
}

inline ncd::Decomposition blocks_from(const std::string& text, const ncd::SparseGraph& g) {
    std::istringstream in(text);
    return ncd::load_decomposition(in, g);
}

inline ncd::SparseGraph fixture_graph(const std::string& rel) { return ncd::load_edge_list_file(fixture(rel)); }

inline ncd::Decomposition fixture_blocks(const std::string& rel, const ncd::SparseGraph& g) {
    return ncd::load_decomposition_file(fixture(rel), g);
}

inline ncd::NodeId id(const ncd::SparseGraph& g, const std::string& label) { return *g.labels().find(label); }

/// Scores in label order "1".."n" for graphs labelled by integers.
inline std::vector<double> by_label(const ncd::SparseGraph& g, std::span<const double> pi) {
    std::vector<double> out(pi.size());
    for (std::size_t k = 0; k < pi.size(); ++k) out[k] = pi[id(g, std::to_string(k + 1))];
    return out;
}

inline double l1(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline std::vector<double> to_std(const ncd::lab::Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Random graph with a random partition; `dangling` is the exact dangling share.
inline ncd::BlockGraph random_instance(std::uint64_t seed, std::size_t max_n, std::size_t max_k, double dangling = 0.25) {
    ncd::SeededRng rng(seed);
    ncd::BlockGraphParams p;
    p.nodes = 4 + rng.below(max_n - 3);
    p.blocks = 1 + rng.below(std::min(max_k, p.nodes));
    p.min_out = 1;
    p.max_out = 1 + rng.below(6);
    p.intra_block = rng.uniform01();
    p.dangling_fraction = dangling;
    p.seed = rng.next();
    return ncd::generate_block_graph(p);
}

/// Random graph with overlapping blocks: each node joins one or two blocks.
inline ncd::Decomposition random_overlapping(const ncd::SparseGraph& g, std::size_t K, std::uint64_t seed) {
    ncd::SeededRng rng(seed);
    const auto n = g.node_count();
    std::vector<std::pair<ncd::NodeId, ncd::BlockId>> m;
    for (std::size_t k = 0; k < K; ++k) m.emplace_back(static_cast<ncd::NodeId>(k % n), static_cast<ncd::BlockId>(k));
    for (std::size_t u = 0; u < n; ++u) {
        m.emplace_back(static_cast<ncd::NodeId>(u), static_cast<ncd::BlockId>(rng.below(K)));
        if (rng.uniform01() < 0.3) m.emplace_back(static_cast<ncd::NodeId>(u), static_cast<ncd::BlockId>(rng.below(K)));
    }
    return ncd::Decomposition::from_membership(n, K, std::move(m));
}

/// Dense row-major n x n copy of R*A.
inline ncd::lab::Matrix dense_RA(const ncd::ProximityFactors& f) {
    const auto n = static_cast<Eigen::Index>(f.node_count());
    const auto K = static_cast<Eigen::Index>(f.block_count());
    ncd::lab::Matrix R = ncd::lab::Matrix::Zero(n, K), A = ncd::lab::Matrix::Zero(K, n);
    for (Eigen::Index u = 0; u < n; ++u)
        for (Eigen::Index k = 0; k < K; ++k) R(u, k) = f.R.at(static_cast<std::size_t>(u), static_cast<std::size_t>(k));
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index u = 0; u < n; ++u) A(k, u) = f.A.at(static_cast<std::size_t>(k), static_cast<std::size_t>(u));
    return R * A;
}

}  // namespace testing
