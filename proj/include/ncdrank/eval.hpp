#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ncdrank/decomposition.hpp"
#include "ncdrank/graph.hpp"
#include "ncdrank/ranking.hpp"

namespace ncd {

/// Tie-corrected Kendall tau (tau-b), O(n log n). Throws InvalidArgument on
/// length mismatch, n < 2, NaN, or when either vector is constant.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// O(n^2) pair count of the same statistic.
double kendall_tau_reference(std::span<const double> a, std::span<const double> b);

struct SpamFarm {
    SparseGraph graph;
    /// Input decompositions extended so every satellite joins the target's blocks.
    std::vector<Decomposition> decomps;
    std::vector<NodeId> satellites;
};

/// Adds n satellites, each linked to and from `target` only.
SpamFarm inject_spam_farm(const SparseGraph& g, NodeId target, std::size_t n,
                          std::span<const Decomposition> decomps = {});

/// Keeps a uniform sample of exactly round(keep_fraction * |E|) edges.
SparseGraph sparsify(const SparseGraph& g, double keep_fraction, std::uint64_t seed);

/// For each listed node, deletes a uniform sample of round(fraction * indegree)
/// of its incoming edges.
SparseGraph remove_inlinks(const SparseGraph& g, std::span<const NodeId> nodes, double fraction, std::uint64_t seed);

struct MethodSpec {
    std::string name;
    /// PageRank uses cfg.eta as alpha and ignores cfg.mus.
    bool pagerank = false;
    RankingConfig cfg;
};

/// Rank `g` with one method; decompositions feed the inter-level terms and
/// the NCDaware patch.
RankVector run_method(const MethodSpec& m, const SparseGraph& g, std::span<const Decomposition> decomps);

struct SpamExperiment {
    /// Satellite counts; each is a perturbation level.
    std::vector<std::size_t> satellites;
};
struct SparsityExperiment {
    std::vector<double> keep_fractions;
};
struct NewPagesExperiment {
    /// Share of nodes treated as newly added.
    double node_fraction = 0.1;
    std::vector<double> remove_fractions{0.9};
};

struct ExperimentSpec {
    std::variant<SpamExperiment, SparsityExperiment, NewPagesExperiment> kind;
    std::size_t repetitions = 10;
    std::uint64_t seed = 1;
};

struct ExperimentRow {
    std::string method;
    double level = 0.0;
    std::size_t repetition = 0;
    std::string metric;
    double value = 0.0;
};

struct ComparisonReport {
    std::vector<ExperimentRow> rows;

    /// Mean of `metric` for (method, level) over repetitions.
    double mean(const std::string& method, double level, const std::string& metric) const;
};

/// Spam: metrics target_score and gain_per_satellite. Sparsity: tau against
/// the unperturbed ranking. New pages: tau and new_mass (perturbed over base
/// total score of the selected nodes).
ComparisonReport run_experiment(const ExperimentSpec& spec, std::span<const MethodSpec> methods,
                                const SparseGraph& g, std::span<const Decomposition> decomps);

/// CSV with header method,perturbation_level,repetition,metric,value.
void write_report_csv(std::ostream& out, const ComparisonReport& report);

}  // namespace ncd
