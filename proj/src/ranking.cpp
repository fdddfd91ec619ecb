#include "ncdrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ncdrank/error.hpp"
#include "ncdrank/kernels.hpp"

namespace ncd {

namespace {

constexpr double kWeightSlack = 1e-12;
constexpr double kDistributionSlack = 1e-9;

void check_distribution(std::span<const double> x, std::size_t n, const char* what) {
    if (x.size() != n)
        throw InvalidArgument(std::string(what) + " has length " + std::to_string(x.size()) + ", expected " +
                              std::to_string(n));
    double s = 0.0;
    for (double e : x) {
        if (!std::isfinite(e) || e < 0.0) throw InvalidArgument(std::string(what) + " has a negative or non-finite entry");
        s += e;
    }
    if (std::abs(s - 1.0) > kDistributionSlack) throw InvalidArgument(std::string(what) + " does not sum to 1");
}

std::vector<double> normalized(std::vector<double> x) {
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    for (auto& e : x) e /= s;
    return x;
}

}  // namespace

double RankingConfig::mu_total() const noexcept { return std::accumulate(mus.begin(), mus.end(), 0.0); }

double RankingConfig::teleport_weight() const noexcept {
    const double t = 1.0 - eta - mu_total();
    return std::abs(t) <= kWeightSlack ? 0.0 : t;
}

void RankingConfig::validate(std::size_t decomposition_count) const {
    if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0) throw InvalidArgument("eta must lie in [0, 1]");
    for (double m : mus)
        if (!std::isfinite(m) || m < 0.0) throw InvalidArgument("mu weights must be non-negative");
    if (eta + mu_total() > 1.0 + kWeightSlack) throw InvalidArgument("eta + sum(mu) exceeds 1");
    if (mus.size() != decomposition_count)
        throw InvalidArgument("got " + std::to_string(mus.size()) + " mu weights for " +
                              std::to_string(decomposition_count) + " decompositions");
    if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (max_iters == 0) throw InvalidArgument("max_iters must be at least 1");
    if (const auto* b = std::get_if<BlockBalancedTeleport>(&teleport); b && b->decomposition >= decomposition_count)
        throw InvalidArgument("block-balanced teleport refers to a missing decomposition");
    if (const auto* d = std::get_if<NcdAwareDangling>(&dangling); d && d->decomposition >= decomposition_count)
        throw InvalidArgument("NCDaware dangling strategy needs a decomposition");
}

std::vector<double> teleport_vector(const TeleportSpec& spec, const SparseGraph& g,
                                    std::span<const Decomposition> decomps) {
    const auto n = g.node_count();
    if (n == 0) throw InvalidArgument("teleport vector of an empty graph");
    if (std::holds_alternative<UniformTeleport>(spec)) return std::vector<double>(n, 1.0 / static_cast<double>(n));

    if (const auto* b = std::get_if<BlockBalancedTeleport>(&spec)) {
        if (b->decomposition >= decomps.size()) throw InvalidArgument("block-balanced teleport needs a decomposition");
        const auto& d = decomps[b->decomposition];
        if (d.node_count() != n) throw InvalidArgument("decomposition and graph sizes differ");
        const double k = static_cast<double>(d.block_count());
        std::vector<double> v(n, 0.0);
        for (BlockId blk = 0; blk < d.block_count(); ++blk) {
            const double w = 1.0 / (k * static_cast<double>(d.block_size(blk)));
            for (auto u : d.block(blk)) v[u] += w;
        }
        return normalized(std::move(v));
    }

    const auto& custom = std::get<CustomTeleport>(spec);
    check_distribution(custom.v, n, "custom teleport vector");
    return normalized(custom.v);
}

RankOperator::RankOperator(const SparseGraph& g, std::vector<ProximityFactors> factors, std::vector<double> v,
                           const RankingConfig& cfg)
    : n_(g.node_count()), cfg_(cfg), graph_(&g), factors_(std::move(factors)), v_(std::move(v)) {
    cfg_.validate(factors_.size());
    workers_ = kernels::resolve_workers(cfg_.workers);
    tau_ = cfg_.teleport_weight();
    check_distribution(v_, n_, "teleport vector");
    if (tau_ > 0.0 && std::any_of(v_.begin(), v_.end(), [](double x) { return x == 0.0; }))
        throw InvalidArgument("teleport vector must be strictly positive unless eta + sum(mu) = 1");

    dangling_.assign(n_, 0);
    for (std::size_t u = 0; u < n_; ++u) dangling_[u] = g.is_dangling(static_cast<NodeId>(u)) ? 1 : 0;

    // H^T with eta folded into the values; dangling sources contribute nothing.
    const auto& in = g.in_adjacency();
    h_pull_.rows = n_;
    h_pull_.cols = n_;
    h_pull_.offsets = in.offsets;
    h_pull_.indices.assign(in.sources.begin(), in.sources.end());
    h_pull_.values.resize(in.sources.size());
    for (std::size_t e = 0; e < in.sources.size(); ++e)
        h_pull_.values[e] = cfg_.eta / static_cast<double>(g.out_degree(in.sources[e]));

    std::size_t ncd_index = factors_.size();
    if (const auto* d = std::get_if<NcdAwareDangling>(&cfg_.dangling)) ncd_index = d->decomposition;
    if (const auto* w = std::get_if<WeaklyPreferential>(&cfg_.dangling)) {
        check_distribution(w->f, n_, "weak-preferential patch");
        patch_ = w->f;
    }
    scalar_dangling_ = ncd_index == factors_.size();

    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const auto& f = factors_[i];
        if (f.node_count() != n_) throw InvalidArgument("proximity factors and graph sizes differ");
        std::vector<double> c(n_, cfg_.mus[i]);
        if (i == ncd_index) {
            for (std::size_t u = 0; u < n_; ++u) {
                if (!dangling_[u]) continue;
                c[u] += cfg_.eta;
                auto row = inter_level_row(static_cast<NodeId>(u), f);
                if (row.size() == 1 && row.front().first == u)
                    warnings_.push_back("dangling node '" + g.labels().label(static_cast<NodeId>(u)) +
                                        "' lies only in singleton blocks; its NCDaware patch is a self-loop");
            }
        }
        // R^T with the per-node weight folded into the values.
        CsrMatrix rt = f.R.transpose();
        for (std::size_t k = 0; k < rt.rows; ++k)
            for (auto e = rt.offsets[k]; e < rt.offsets[k + 1]; ++e) rt.values[e] *= c[rt.indices[e]];
        r_pull_.push_back(std::move(rt));
        a_pull_.push_back(f.A.transpose());
        coef_.push_back(std::move(c));
    }
}

void RankOperator::add_scalar_terms(std::span<const double> pi, std::span<double> out, int workers) const {
    const double mass = kernels::sum(pi, workers);
    const double tel = tau_ * mass;
    const double dang = scalar_dangling_ ? cfg_.eta * kernels::masked_sum(pi, dangling_, workers) : 0.0;
    const auto n = static_cast<std::ptrdiff_t>(n_);
    if (patch_.empty()) {
        const double w = tel + dang;
        if (w == 0.0) return;
#pragma omp parallel for schedule(static) num_threads(workers)
        for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] += w * v_[static_cast<std::size_t>(i)];
    } else {
#pragma omp parallel for schedule(static) num_threads(workers)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            out[u] += dang * patch_[u] + tel * v_[u];
        }
    }
}

void RankOperator::apply(std::span<const double> pi, std::span<double> out, bool normalize) const {
    if (pi.size() != n_ || out.size() != n_) throw InvalidArgument("apply: vector length differs from node count");
    std::fill(out.begin(), out.end(), 0.0);
    kernels::pull_spmv_add(h_pull_, pi, out, workers_);
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        std::vector<double> z(r_pull_[i].rows, 0.0);
        kernels::pull_spmv_add(r_pull_[i], pi, z, workers_);
        kernels::pull_spmv_add(a_pull_[i], z, out, workers_);
    }
    add_scalar_terms(pi, out, workers_);
    if (!normalize) return;
    const double s = kernels::sum(out, workers_);
    if (!std::isfinite(s) || s <= 0.0) throw NumericError("rank step produced a non-finite or zero vector");
    kernels::scale(out, 1.0 / s, workers_);
}

void RankOperator::apply_reference(std::span<const double> pi, std::span<double> out, bool normalize) const {
    if (pi.size() != n_ || out.size() != n_) throw InvalidArgument("apply: vector length differs from node count");
    std::fill(out.begin(), out.end(), 0.0);
    const auto& g = *graph_;
    double mass = 0.0, dangling_mass = 0.0;
    for (std::size_t u = 0; u < n_; ++u) {
        mass += pi[u];
        if (dangling_[u]) {
            dangling_mass += pi[u];
            continue;
        }
        const double share = cfg_.eta * pi[u] / static_cast<double>(g.out_degree(static_cast<NodeId>(u)));
        for (auto w : g.out_neighbors(static_cast<NodeId>(u))) out[w] += share;
    }
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        std::vector<double> x(n_);
        for (std::size_t u = 0; u < n_; ++u) x[u] = coef_[i][u] * pi[u];
        std::vector<double> z(factors_[i].block_count(), 0.0);
        kernels::push_spmv_add(factors_[i].R, x, z);
        kernels::push_spmv_add(factors_[i].A, z, out);
    }
    const double tel = tau_ * mass;
    const double dang = scalar_dangling_ ? cfg_.eta * dangling_mass : 0.0;
    for (std::size_t u = 0; u < n_; ++u) out[u] += patch_.empty() ? (tel + dang) * v_[u] : dang * patch_[u] + tel * v_[u];
    if (!normalize) return;
    double s = 0.0;
    for (double e : out) s += e;
    if (!std::isfinite(s) || s <= 0.0) throw NumericError("rank step produced a non-finite or zero vector");
    for (auto& e : out) e /= s;
}

std::vector<double> apply_step(std::span<const double> pi, const RankOperator& op) {
    std::vector<double> out(op.node_count());
    op.apply(pi, out);
    return out;
}

RankVector power_iterate(const RankOperator& op) {
    const auto n = op.node_count();
    const auto& cfg = op.config();
    const int workers = kernels::resolve_workers(cfg.workers);
    RankVector rv;
    std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        op.apply(pi, next);
        const double r = kernels::l1_distance(next, pi, workers);
        rv.residual_history.push_back(r);
        pi.swap(next);
        rv.iterations = it;
        rv.final_residual = r;
        if (r < cfg.tol) {
            rv.converged = true;
            break;
        }
    }
    rv.pi = std::move(pi);
    return rv;
}

RankVector ncdawarerank(const SparseGraph& g, std::span<const Decomposition> decomps, const RankingConfig& cfg) {
    cfg.validate(decomps.size());
    std::vector<ProximityFactors> factors;
    factors.reserve(decomps.size());
    for (const auto& d : decomps) factors.push_back(build_factors(g, d));
    RankOperator op(g, std::move(factors), teleport_vector(cfg.teleport, g, decomps), cfg);
    return power_iterate(op);
}

RankVector pagerank(const SparseGraph& g, double alpha, const TeleportSpec& teleport, const DanglingStrategy& dangling,
                    std::span<const Decomposition> decomps, double tol, std::size_t max_iters, int workers) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    RankingConfig cfg;
    cfg.eta = alpha;
    cfg.teleport = teleport;
    cfg.dangling = dangling;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    cfg.workers = workers;
    std::vector<ProximityFactors> factors;
    if (std::holds_alternative<NcdAwareDangling>(dangling)) {
        cfg.mus.assign(decomps.size(), 0.0);
        for (const auto& d : decomps) factors.push_back(build_factors(g, d));
    } else {
        cfg.mus.clear();
    }
    auto v = teleport_vector(teleport, g, decomps);
    RankOperator op(g, std::move(factors), std::move(v), cfg);
    return power_iterate(op);
}

namespace damping {

DampingFunction pagerank(double alpha) {
    return [alpha](std::size_t k) { return (1.0 - alpha) * std::pow(alpha, static_cast<double>(k)); };
}

DampingFunction total_rank() {
    return [](std::size_t k) {
        const double x = static_cast<double>(k);
        return 1.0 / ((x + 1.0) * (x + 2.0));
    };
}

DampingFunction linear_rank(std::size_t L) {
    if (L == 0) throw InvalidArgument("LinearRank length must be positive");
    return [L](std::size_t k) {
        if (k >= L) return 0.0;
        const double l = static_cast<double>(L);
        return 2.0 * (l - static_cast<double>(k)) / (l * (l + 1.0));
    };
}

DampingFunction hyper_rank(double beta) {
    if (!(beta > 1.0)) throw InvalidArgument("HyperRank beta must exceed 1");
    return [beta](std::size_t k) { return std::pow(static_cast<double>(k) + 1.0, -beta); };
}

}  // namespace damping

RankVector functional_rank(const SparseGraph& g, const DampingFunction& psi, std::span<const double> v,
                           const DanglingStrategy& dangling, std::span<const Decomposition> decomps,
                           const SeriesTruncation& trunc, int workers) {
    if (trunc.max_terms == 0) throw InvalidArgument("max_terms must be at least 1");
    const auto n = g.node_count();
    check_distribution(v, n, "functional-rank start vector");

    RankingConfig cfg;
    cfg.eta = 1.0;
    cfg.teleport = CustomTeleport{std::vector<double>(v.begin(), v.end())};
    cfg.dangling = dangling;
    cfg.workers = workers;
    std::vector<ProximityFactors> factors;
    if (std::holds_alternative<NcdAwareDangling>(dangling)) {
        cfg.mus.assign(decomps.size(), 0.0);
        for (const auto& d : decomps) factors.push_back(build_factors(g, d));
    } else {
        cfg.mus.clear();
    }
    RankOperator op(g, std::move(factors), std::vector<double>(v.begin(), v.end()), cfg);

    auto weight = [&](std::size_t k) {
        const double w = psi(k);
        if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("damping function returned a negative weight");
        return w;
    };

    RankVector rv;
    std::vector<double> x(v.begin(), v.end()), next(n);
    std::vector<double> acc(n);
    const double w0 = weight(0);
    for (std::size_t i = 0; i < n; ++i) acc[i] = w0 * x[i];
    rv.iterations = 1;
    for (std::size_t k = 1; k < trunc.max_terms; ++k) {
        op.apply(x, next, false);
        x.swap(next);
        const double w = weight(k);
        const double term_mass = w * kernels::sum(x, kernels::resolve_workers(workers));
        for (std::size_t i = 0; i < n; ++i) acc[i] += w * x[i];
        rv.iterations = k + 1;
        rv.residual_history.push_back(term_mass);
        rv.final_residual = term_mass;
        if (term_mass < trunc.tail_tol) {
            rv.converged = true;
            break;
        }
    }
    const double s = std::accumulate(acc.begin(), acc.end(), 0.0);
    if (!(s > 0.0)) throw NumericError("functional rank series has zero mass");
    for (auto& e : acc) e /= s;
    rv.pi = std::move(acc);
    return rv;
}

double convergence_ratio(std::span<const double> history) {
    if (history.size() < 5) throw InvalidArgument("convergence_ratio needs at least 5 residuals");
    const std::size_t take = std::max<std::size_t>(5, history.size() / 2);
    const auto tail = history.subspan(history.size() - take);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < tail.size(); ++i) {
        if (!(tail[i] > 0.0)) continue;
        const double x = static_cast<double>(i), y = std::log(tail[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    // Residuals hit exact zero: convergence is immediate.
    if (m < 2) return 0.0;
    const double md = static_cast<double>(m);
    const double denom = md * sxx - sx * sx;
    if (denom == 0.0) return 0.0;
    return std::exp((md * sxy - sx * sy) / denom);
}

}  // namespace ncd
