#include "ncdrank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>

#include "ncdrank/error.hpp"
#include "ncdrank/random.hpp"
#include "text_util.hpp"

namespace ncd {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("kendall_tau: vectors differ in length");
    if (a.size() < 2) throw InvalidArgument("kendall_tau: need at least 2 entries");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::isnan(a[i]) || std::isnan(b[i])) throw InvalidArgument("kendall_tau: NaN score");
}

std::int64_t pairs(std::int64_t t) { return t * (t - 1) / 2; }

/// Sorts x ascending and returns the number of pairs i < j with x[i] > x[j].
std::int64_t merge_count(std::vector<double>& x, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const auto mid = lo + (hi - lo) / 2;
    std::int64_t inv = merge_count(x, buf, lo, mid) + merge_count(x, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (x[j] < x[i]) {
            inv += static_cast<std::int64_t>(mid - i);
            buf[k++] = x[j++];
        } else {
            buf[k++] = x[i++];
        }
    }
    while (i < mid) buf[k++] = x[i++];
    while (j < hi) buf[k++] = x[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              x.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

std::uint64_t level_seed(std::uint64_t base, std::size_t rep, std::size_t level) {
    return base ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(rep) * 1024 + level + 1));
}

template <class F>
std::vector<RankVector> rank_all(std::span<const MethodSpec> methods, F&& run) {
    std::vector<RankVector> out(methods.size());
    std::vector<std::exception_ptr> errs(methods.size());
    const auto m = static_cast<std::ptrdiff_t>(methods.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = run(methods[static_cast<std::size_t>(i)]);
        } catch (...) {
            errs[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace

double kendall_tau(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    const auto n = a.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return a[i] < a[j] || (a[i] == a[j] && b[i] < b[j]); });

    std::int64_t n1 = 0, n3 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && a[idx[j]] == a[idx[i]]) ++j;
        n1 += pairs(static_cast<std::int64_t>(j - i));
        for (std::size_t k = i; k < j;) {
            std::size_t l = k;
            while (l < j && b[idx[l]] == b[idx[k]]) ++l;
            n3 += pairs(static_cast<std::int64_t>(l - k));
            k = l;
        }
        i = j;
    }

    std::vector<double> seq(n), buf(n);
    for (std::size_t i = 0; i < n; ++i) seq[i] = b[idx[i]];
    const auto swaps = merge_count(seq, buf, 0, n);

    std::int64_t n2 = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && seq[j] == seq[i]) ++j;
        n2 += pairs(static_cast<std::int64_t>(j - i));
        i = j;
    }

    const auto n0 = pairs(static_cast<std::int64_t>(n));
    if (n0 == n1 || n0 == n2) throw InvalidArgument("kendall_tau: undefined for a constant vector");
    const auto num = n0 - n1 - n2 + n3 - 2 * swaps;
    return static_cast<double>(num) / std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

double kendall_tau_reference(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    std::int64_t concordant = 0, discordant = 0, only_a = 0, only_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0 && db == 0) continue;
            if (da == 0)
                ++only_a;
            else if (db == 0)
                ++only_b;
            else if ((da > 0) == (db > 0))
                ++concordant;
            else
                ++discordant;
        }
    }
    const double cd = static_cast<double>(concordant + discordant);
    const double den = std::sqrt((cd + static_cast<double>(only_b)) * (cd + static_cast<double>(only_a)));
    if (den == 0.0) throw InvalidArgument("kendall_tau: undefined for a constant vector");
    return static_cast<double>(concordant - discordant) / den;
}

SpamFarm inject_spam_farm(const SparseGraph& g, NodeId target, std::size_t n, std::span<const Decomposition> decomps) {
    if (target >= g.node_count()) throw InvalidArgument("spam target out of range");
    const auto base = g.node_count();
    LabelMap labels = g.labels();
    SpamFarm farm;
    auto edges = g.edges();
    for (std::size_t i = 0; i < n; ++i) {
        std::string label = "spam:" + g.labels().label(target) + ":" + std::to_string(i);
        while (labels.find(label)) label += "'";
        const auto s = labels.intern(label);
        farm.satellites.push_back(s);
        edges.emplace_back(s, target);
        edges.emplace_back(target, s);
    }
    farm.graph = SparseGraph::from_edges(base + n, std::move(edges), std::move(labels));
    for (const auto& d : decomps) {
        if (d.node_count() != base) throw InvalidArgument("decomposition and graph sizes differ");
        std::vector<std::pair<NodeId, BlockId>> membership;
        for (std::size_t u = 0; u < base; ++u)
            for (auto k : d.blocks_of(static_cast<NodeId>(u))) membership.emplace_back(static_cast<NodeId>(u), k);
        for (auto s : farm.satellites)
            for (auto k : d.blocks_of(target)) membership.emplace_back(s, k);
        std::vector<std::string> block_labels;
        for (BlockId k = 0; k < d.block_count(); ++k) block_labels.push_back(d.block_label(k));
        farm.decomps.push_back(
            Decomposition::from_membership(base + n, d.block_count(), std::move(membership), std::move(block_labels)));
    }
    return farm;
}

SparseGraph sparsify(const SparseGraph& g, double keep_fraction, std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw InvalidArgument("keep_fraction must lie in (0, 1]");
    auto edges = g.edges();
    const auto keep = static_cast<std::uint64_t>(std::llround(keep_fraction * static_cast<double>(edges.size())));
    SeededRng rng(seed);
    std::vector<std::pair<NodeId, NodeId>> kept;
    kept.reserve(keep);
    for (auto i : rng.sample(edges.size(), keep)) kept.push_back(edges[i]);
    return SparseGraph::from_edges(g.node_count(), std::move(kept), g.labels());
}

SparseGraph remove_inlinks(const SparseGraph& g, std::span<const NodeId> nodes, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must lie in [0, 1]");
    if (nodes.empty()) throw InvalidArgument("remove_inlinks: no nodes selected");
    std::vector<NodeId> targets(nodes.begin(), nodes.end());
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    const auto& in = g.in_adjacency();
    SeededRng rng(seed);
    std::vector<std::pair<NodeId, NodeId>> removed;
    for (auto v : targets) {
        if (v >= g.node_count()) throw InvalidArgument("remove_inlinks: node out of range");
        const auto lo = in.offsets[v], deg = in.offsets[v + 1] - lo;
        const auto drop = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(deg)));
        for (auto i : rng.sample(deg, drop)) removed.emplace_back(in.sources[lo + i], v);
    }
    std::sort(removed.begin(), removed.end());
    std::vector<std::pair<NodeId, NodeId>> kept;
    for (const auto& e : g.edges())
        if (!std::binary_search(removed.begin(), removed.end(), e)) kept.push_back(e);
    return SparseGraph::from_edges(g.node_count(), std::move(kept), g.labels());
}

RankVector run_method(const MethodSpec& m, const SparseGraph& g, std::span<const Decomposition> decomps) {
    if (m.pagerank)
        return pagerank(g, m.cfg.eta, m.cfg.teleport, m.cfg.dangling, decomps, m.cfg.tol, m.cfg.max_iters,
                        m.cfg.workers);
    return ncdawarerank(g, decomps, m.cfg);
}

double ComparisonReport::mean(const std::string& method, double level, const std::string& metric) const {
    double s = 0.0;
    std::size_t c = 0;
    for (const auto& r : rows) {
        if (r.method == method && r.level == level && r.metric == metric) {
            s += r.value;
            ++c;
        }
    }
    if (c == 0) throw InvalidArgument("no rows for " + method + "/" + metric);
    return s / static_cast<double>(c);
}

ComparisonReport run_experiment(const ExperimentSpec& spec, std::span<const MethodSpec> methods, const SparseGraph& g,
                                std::span<const Decomposition> decomps) {
    if (spec.repetitions == 0) throw InvalidArgument("repetitions must be at least 1");
    ComparisonReport rep;
    auto emit = [&](const std::string& method, double level, std::size_t r, const char* metric, double value) {
        rep.rows.push_back({method, level, r, metric, value});
    };
    const auto n = g.node_count();

    if (const auto* spam = std::get_if<SpamExperiment>(&spec.kind)) {
        auto base = rank_all(methods, [&](const MethodSpec& m) { return run_method(m, g, decomps); });
        SeededRng rng(spec.seed);
        for (std::size_t r = 0; r < spec.repetitions; ++r) {
            const auto target = static_cast<NodeId>(rng.below(n));
            for (std::size_t i = 0; i < methods.size(); ++i)
                emit(methods[i].name, 0.0, r, "target_score", base[i].pi[target]);
            for (auto count : spam->satellites) {
                if (count == 0) continue;
                auto farm = inject_spam_farm(g, target, count, decomps);
                auto res = rank_all(methods, [&](const MethodSpec& m) { return run_method(m, farm.graph, farm.decomps); });
                for (std::size_t i = 0; i < methods.size(); ++i) {
                    const double s = res[i].pi[target];
                    emit(methods[i].name, static_cast<double>(count), r, "target_score", s);
                    emit(methods[i].name, static_cast<double>(count), r, "gain_per_satellite",
                         (s - base[i].pi[target]) / static_cast<double>(count));
                }
            }
        }
        return rep;
    }

    auto base = rank_all(methods, [&](const MethodSpec& m) { return run_method(m, g, decomps); });

    if (const auto* sp = std::get_if<SparsityExperiment>(&spec.kind)) {
        for (std::size_t r = 0; r < spec.repetitions; ++r) {
            for (std::size_t li = 0; li < sp->keep_fractions.size(); ++li) {
                const double keep = sp->keep_fractions[li];
                auto h = sparsify(g, keep, level_seed(spec.seed, r, li));
                auto res = rank_all(methods, [&](const MethodSpec& m) { return run_method(m, h, decomps); });
                for (std::size_t i = 0; i < methods.size(); ++i)
                    emit(methods[i].name, keep, r, "tau", kendall_tau(base[i].pi, res[i].pi));
            }
        }
        return rep;
    }

    const auto& np = std::get<NewPagesExperiment>(spec.kind);
    if (!(np.node_fraction > 0.0 && np.node_fraction <= 1.0)) throw InvalidArgument("node_fraction must lie in (0, 1]");
    const auto pick = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(np.node_fraction * static_cast<double>(n))));
    SeededRng rng(spec.seed);
    for (std::size_t r = 0; r < spec.repetitions; ++r) {
        std::vector<NodeId> selected;
        for (auto u : rng.sample(n, pick)) selected.push_back(static_cast<NodeId>(u));
        for (std::size_t li = 0; li < np.remove_fractions.size(); ++li) {
            const double frac = np.remove_fractions[li];
            auto h = remove_inlinks(g, selected, frac, level_seed(spec.seed, r, li));
            auto res = rank_all(methods, [&](const MethodSpec& m) { return run_method(m, h, decomps); });
            for (std::size_t i = 0; i < methods.size(); ++i) {
                double before = 0.0, after = 0.0;
                for (auto u : selected) {
                    before += base[i].pi[u];
                    after += res[i].pi[u];
                }
                emit(methods[i].name, frac, r, "tau", kendall_tau(base[i].pi, res[i].pi));
                emit(methods[i].name, frac, r, "new_mass", after / before);
            }
        }
    }
    return rep;
}

void write_report_csv(std::ostream& out, const ComparisonReport& report) {
    out << "method,perturbation_level,repetition,metric,value\n";
    for (const auto& r : report.rows)
        out << r.method << ',' << detail::format_sig17(r.level) << ',' << r.repetition << ',' << r.metric << ','
            << detail::format_sig17(r.value) << '\n';
}

}  // namespace ncd
