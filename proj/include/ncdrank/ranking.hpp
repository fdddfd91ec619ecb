#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ncdrank/csr.hpp"
#include "ncdrank/decomposition.hpp"
#include "ncdrank/graph.hpp"

namespace ncd {

struct UniformTeleport {};
/// v_j proportional to sum over blocks k containing j of 1/(K |D_k|).
struct BlockBalancedTeleport {
    std::size_t decomposition = 0;
};
struct CustomTeleport {
    std::vector<double> v;
};
using TeleportSpec = std::variant<UniformTeleport, BlockBalancedTeleport, CustomTeleport>;

/// Dangling rows of H replaced by the teleport vector.
struct StronglyPreferential {};
/// Dangling rows of H replaced by a separate distribution f.
struct WeaklyPreferential {
    std::vector<double> f;
};
/// Dangling rows of H replaced by the matching rows of M for one decomposition.
struct NcdAwareDangling {
    std::size_t decomposition = 0;
};
using DanglingStrategy = std::variant<StronglyPreferential, WeaklyPreferential, NcdAwareDangling>;

struct RankingConfig {
    double eta = 0.85;
    std::vector<double> mus{0.1};
    TeleportSpec teleport = UniformTeleport{};
    DanglingStrategy dangling = NcdAwareDangling{};
    double tol = 1e-8;
    std::size_t max_iters = 1000;
    /// 0 means the OpenMP default.
    int workers = 0;

    double mu_total() const noexcept;
    /// 1 - eta - sum(mus), clamped to exactly 0 within 1e-12.
    double teleport_weight() const noexcept;
    bool no_teleport_mode() const noexcept { return teleport_weight() == 0.0; }

    /// Throws InvalidArgument unless the weights are a valid convex split and
    /// the decomposition references are in range.
    void validate(std::size_t decomposition_count) const;
};

struct RankVector {
    std::vector<double> pi;
    std::size_t iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
};

std::vector<double> teleport_vector(const TeleportSpec& spec, const SparseGraph& g,
                                    std::span<const Decomposition> decomps = {});

/// Matrix-free P = eta*H + sum_i mu_i*M_i + (1-eta-sum mu)*1v^T with the
/// configured dangling patch. Immutable after construction; keeps a pointer
/// to the graph, which must outlive it.
class RankOperator {
public:
    RankOperator(const SparseGraph& g, std::vector<ProximityFactors> factors, std::vector<double> v,
                 const RankingConfig& cfg);

    std::size_t node_count() const noexcept { return n_; }
    const std::vector<double>& teleport() const noexcept { return v_; }
    const RankingConfig& config() const noexcept { return cfg_; }
    const std::vector<ProximityFactors>& factors() const noexcept { return factors_; }
    /// Non-fatal findings made while preparing the operator.
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// out = pi^T P. Parallel pull kernel over the transposed factors.
    void apply(std::span<const double> pi, std::span<double> out, bool normalize = true) const;
    /// Same product, serial scatter over out-links and factor rows.
    void apply_reference(std::span<const double> pi, std::span<double> out, bool normalize = true) const;

private:
    void add_scalar_terms(std::span<const double> pi, std::span<double> out, int workers) const;

    std::size_t n_ = 0;
    RankingConfig cfg_;
    int workers_ = 1;
    const SparseGraph* graph_ = nullptr;
    CsrMatrix h_pull_;  // H^T without dangling rows
    std::vector<ProximityFactors> factors_;
    std::vector<CsrMatrix> r_pull_;  // R_i^T
    std::vector<CsrMatrix> a_pull_;  // A_i^T
    std::vector<std::vector<double>> coef_;  // per decomposition, per node weight on M_i
    std::vector<unsigned char> dangling_;
    std::vector<double> v_;
    std::vector<double> patch_;  // weak-preferential f
    double tau_ = 0.0;
    bool scalar_dangling_ = false;
    std::vector<std::string> warnings_;
};

/// One step pi^T P, renormalized.
std::vector<double> apply_step(std::span<const double> pi, const RankOperator& op);

/// Power iteration from the uniform vector until the L1 change drops below
/// the operator's tolerance or the iteration cap is hit.
RankVector power_iterate(const RankOperator& op);

RankVector ncdawarerank(const SparseGraph& g, std::span<const Decomposition> decomps, const RankingConfig& cfg);

/// Classic PageRank with damping alpha. Decompositions are only consulted
/// for the NCDaware dangling patch.
RankVector pagerank(const SparseGraph& g, double alpha, const TeleportSpec& teleport = UniformTeleport{},
                    const DanglingStrategy& dangling = StronglyPreferential{},
                    std::span<const Decomposition> decomps = {}, double tol = 1e-8,
                    std::size_t max_iters = 1000, int workers = 0);

using DampingFunction = std::function<double(std::size_t)>;

namespace damping {
DampingFunction pagerank(double alpha);
DampingFunction total_rank();
DampingFunction linear_rank(std::size_t L);
/// Unnormalized (k+1)^-beta; the series result is renormalized anyway.
DampingFunction hyper_rank(double beta);
}  // namespace damping

struct SeriesTruncation {
    std::size_t max_terms = 200;
    double tail_tol = 1e-10;
};

/// Truncated sum_k psi(k) (H^T)^k v with H made stochastic by `dangling`.
RankVector functional_rank(const SparseGraph& g, const DampingFunction& psi, std::span<const double> v,
                           const DanglingStrategy& dangling = StronglyPreferential{},
                           std::span<const Decomposition> decomps = {}, const SeriesTruncation& trunc = {},
                           int workers = 0);

/// Asymptotic residual ratio from a log-linear fit over the tail of the
/// history. Needs at least 5 residuals.
double convergence_ratio(std::span<const double> history);

}  // namespace ncd
