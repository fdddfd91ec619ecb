#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "ncdrank/error.hpp"
#include "ncdrank/ncdlab.hpp"
#include "ncdrank/ranking.hpp"
#include "support.hpp"

using namespace ncd;
using lab::Matrix;

namespace {

struct Example {
    SparseGraph g;
    std::vector<Decomposition> d;
};

Example eight_node() {
    auto g = testing::fixture_graph("eight_node/graph.txt");
    auto d = testing::fixture_blocks("eight_node/blocks.txt", g);
    return {std::move(g), {std::move(d)}};
}

// Row-normalized adjacency with zero dangling rows.
Matrix dense_H(const SparseGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Matrix H = Matrix::Zero(n, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        auto nb = g.out_neighbors(static_cast<NodeId>(u));
        for (auto v : nb) H(u, v) = 1.0 / static_cast<double>(nb.size());
    }
    return H;
}

std::vector<double> random_distribution(std::size_t n, std::uint64_t seed) {
    SeededRng rng(seed);
    std::vector<double> x(n);
    for (auto& e : x) e = 0.05 + rng.uniform01();
    const double s = std::accumulate(x.begin(), x.end(), 0.0);
    for (auto& e : x) e /= s;
    return x;
}

RankOperator make_op(const SparseGraph& g, const std::vector<Decomposition>& d, const RankingConfig& cfg) {
    std::vector<ProximityFactors> f;
    for (const auto& x : d) f.push_back(build_factors(g, x));
    return RankOperator(g, std::move(f), teleport_vector(cfg.teleport, g, d), cfg);
}

}  // namespace

TEST_CASE("teleport vectors") {
    auto ex = eight_node();
    auto u = teleport_vector(UniformTeleport{}, ex.g, ex.d);
    for (double e : u) CHECK(e == 0.125);

    auto b = testing::by_label(ex.g, teleport_vector(BlockBalancedTeleport{0}, ex.g, ex.d));
    std::vector<double> want{1. / 8, 1. / 8, 1. / 8, 1. / 8, 1. / 12, 1. / 12, 1. / 12, 1. / 4};
    CHECK(testing::max_abs_diff(b, want) < 1e-15);

    auto one = testing::blocks_from("1 X\n2 X\n3 X\n4 X\n5 X\n6 X\n7 X\n8 X\n", ex.g);
    std::vector<Decomposition> ds{one};
    for (double e : teleport_vector(BlockBalancedTeleport{0}, ex.g, ds)) CHECK(e == doctest::Approx(0.125).epsilon(1e-15));

    // Overlap: proportional then renormalized.
    auto g = testing::graph_from("a b\nb c\n");
    std::vector<Decomposition> ov{testing::blocks_from("a X\nb X\nb Y\nc Y\n", g)};
    auto v = teleport_vector(BlockBalancedTeleport{0}, g, ov);
    CHECK(v[testing::id(g, "a")] == doctest::Approx(0.25));
    CHECK(v[testing::id(g, "b")] == doctest::Approx(0.5));
    CHECK(std::accumulate(v.begin(), v.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(teleport_vector(CustomTeleport{{0.5, 0.5}}, ex.g, ex.d), InvalidArgument);
    CHECK_THROWS_AS(teleport_vector(BlockBalancedTeleport{0}, ex.g, {}), InvalidArgument);
}

TEST_CASE("config validation") {
    RankingConfig cfg;
    CHECK_NOTHROW(cfg.validate(1));
    CHECK(cfg.teleport_weight() == doctest::Approx(0.05));
    CHECK_THROWS_AS(cfg.validate(2), InvalidArgument);
    cfg.mus = {0.2};
    CHECK_THROWS_AS(cfg.validate(1), InvalidArgument);
    cfg.mus = {0.15};
    CHECK(cfg.no_teleport_mode());
    cfg.mus = {-0.01};
    CHECK_THROWS_AS(cfg.validate(1), InvalidArgument);
}

TEST_CASE("eight-node example: materialized P and one step") {
    auto ex = eight_node();
    RankingConfig cfg;
    auto P = lab::materialize_P(ex.g, ex.d, cfg);
    auto at = [&](int i, int j) { return P(testing::id(ex.g, std::to_string(i)), testing::id(ex.g, std::to_string(j))); };
    CHECK(at(1, 2) == doctest::Approx(0.90625).epsilon(1e-14));
    CHECK(at(1, 1) == doctest::Approx(0.05625).epsilon(1e-14));
    CHECK(at(1, 5) == doctest::Approx(0.00625).epsilon(1e-14));
    const double row5[] = {.00625, .00625, .00625, .00625, .02292, .30625, .30625, .33958};
    for (int j = 1; j <= 8; ++j) CHECK(std::abs(at(5, j) - row5[j - 1]) < 1e-5);
    // Node 8 links into A3, so its proximal set is {A3, A4}.
    const double row8[] = {.00625, .00625, .00625, .00625, .85625 + 0.1 / 6, .00625 + 0.1 / 6, .00625 + 0.1 / 6, .05625};
    for (int j = 1; j <= 8; ++j) CHECK(at(8, j) == doctest::Approx(row8[j - 1]).epsilon(1e-14));

    auto op = make_op(ex.g, ex.d, cfg);
    std::vector<double> u(8, 0.125);
    auto step = apply_step(u, op);
    lab::Vector want = P.transpose() * lab::Vector::Constant(8, 0.125);
    for (std::size_t j = 0; j < 8; ++j) CHECK(step[j] == doctest::Approx(want[j]).epsilon(1e-14));
}

TEST_CASE("eta = 1 on a 3-cycle rotates pi") {
    auto g = testing::graph_from("0 1\n1 2\n2 0\n");
    RankingConfig cfg;
    cfg.eta = 1.0;
    cfg.mus.clear();
    cfg.dangling = StronglyPreferential{};
    RankOperator op(g, {}, std::vector<double>(3, 1.0 / 3), cfg);
    std::vector<double> pi{0.5, 0.3, 0.2};
    auto out = apply_step(pi, op);
    CHECK(out[1] == doctest::Approx(0.5));
    CHECK(out[2] == doctest::Approx(0.3));
    CHECK(out[0] == doctest::Approx(0.2));
}

TEST_CASE("all-dangling graph with the strong patch maps anything to v") {
    auto g = SparseGraph::from_edges(4, {});
    RankingConfig cfg;
    cfg.mus.clear();
    cfg.dangling = StronglyPreferential{};
    std::vector<double> v{0.1, 0.2, 0.3, 0.4};
    RankOperator op(g, {}, v, cfg);
    auto out = apply_step(random_distribution(4, 3), op);
    CHECK(testing::max_abs_diff(out, v) < 1e-15);
}

TEST_CASE("eight-node example ranking") {
    auto ex = eight_node();
    auto rv = ncdawarerank(ex.g, ex.d, RankingConfig{});
    CHECK(rv.converged);
    auto pi = testing::by_label(ex.g, rv.pi);
    // First aggregate does not see node 8's row.
    const double want[] = {0.0133, 0.0935, 0.1621, 0.2310};
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(pi[i] - want[i]) <= 1e-4);
    CHECK(pi[0] + pi[1] + pi[2] + pi[3] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(pi[5] == doctest::Approx(pi[6]).epsilon(1e-12));
    CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symmetric 2-cycle") {
    auto g = testing::graph_from("a b\nb a\n");
    std::vector<Decomposition> d{testing::blocks_from("a X\nb X\n", g)};
    auto rv = ncdawarerank(g, d, RankingConfig{});
    CHECK(rv.pi[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rv.pi[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("power iteration matches the dense linear-solve oracle") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto inst = testing::random_instance(seed, 50, 8, 0.25);
        std::vector<Decomposition> d{inst.blocks};
        RankingConfig cfg;
        cfg.tol = 1e-13;
        if (seed % 3 == 1) cfg.teleport = BlockBalancedTeleport{0};
        if (seed % 3 == 2) cfg.dangling = StronglyPreferential{};
        auto rv = ncdawarerank(inst.graph, d, cfg);
        auto oracle = testing::to_std(lab::stationary_dense(lab::materialize_P(inst.graph, d, cfg)));
        CHECK(testing::l1(rv.pi, oracle) < 1e-8);
        for (double e : rv.pi) CHECK(e > 0.0);
    }
}

TEST_CASE("pagerank examples") {
    auto cyc = pagerank(testing::graph_from("0 1\n1 2\n2 0\n"), 0.85);
    for (double e : cyc.pi) CHECK(e == doctest::Approx(1.0 / 3).epsilon(1e-12));

    // 1 -> 2, 2 dangling: pi_1 * 0.925 = 0.5 * pi_2.
    auto g = testing::graph_from("1 2\n");
    auto rv = pagerank(g, 0.85, UniformTeleport{}, StronglyPreferential{}, {}, 1e-14);
    CHECK(rv.pi[testing::id(g, "1")] == doctest::Approx(0.5 / 1.425).epsilon(1e-12));
    CHECK(rv.pi[testing::id(g, "2")] == doctest::Approx(0.925 / 1.425).epsilon(1e-12));
}

TEST_CASE("pagerank equals ncdawarerank with no inter-level term") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = testing::random_instance(seed, 200, 10, 0.3);
        std::vector<Decomposition> d{inst.blocks};
        RankingConfig cfg;
        cfg.eta = 0.85;
        cfg.mus = {0.0};
        cfg.tol = 1e-12;
        auto a = ncdawarerank(inst.graph, d, cfg);
        auto b = pagerank(inst.graph, 0.85, UniformTeleport{}, NcdAwareDangling{}, d, 1e-12);
        CHECK(testing::max_abs_diff(a.pi, b.pi) < 1e-15);
        cfg.mus.clear();
        cfg.dangling = StronglyPreferential{};
        auto c = ncdawarerank(inst.graph, {}, cfg);
        auto e = pagerank(inst.graph, 0.85, UniformTeleport{}, StronglyPreferential{}, {}, 1e-12);
        CHECK(testing::max_abs_diff(c.pi, e.pi) < 1e-15);
    }
}

TEST_CASE("steps are stochastic under every dangling strategy") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        auto inst = testing::random_instance(seed, 300, 12, 0.3);
        const auto n = inst.graph.node_count();
        std::vector<Decomposition> d{inst.blocks, testing::random_overlapping(inst.graph, std::min<std::size_t>(5, n), seed)};
        std::vector<DanglingStrategy> strategies{StronglyPreferential{},
                                                 WeaklyPreferential{random_distribution(n, seed + 100)},
                                                 NcdAwareDangling{1}};
        for (const auto& s : strategies) {
            RankingConfig cfg;
            cfg.mus = {0.06, 0.04};
            cfg.dangling = s;
            auto op = make_op(inst.graph, d, cfg);
            auto pi = random_distribution(n, seed);
            std::vector<double> out(n), ref(n);
            op.apply(pi, out, false);
            op.apply_reference(pi, ref, false);
            CHECK(std::accumulate(out.begin(), out.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(testing::max_abs_diff(out, ref) < 1e-14);
        }
    }
}

TEST_CASE("NCDaware patch equals the rearranged sum") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        auto inst = testing::random_instance(seed, 100, 10, 0.3);
        std::vector<Decomposition> d{inst.blocks};
        RankingConfig cfg;
        cfg.teleport = BlockBalancedTeleport{0};
        auto P = lab::materialize_P(inst.graph, d, cfg);
        auto M = testing::dense_RA(build_factors(inst.graph, inst.blocks));
        auto H = dense_H(inst.graph);
        const auto n = H.rows();
        auto v = teleport_vector(cfg.teleport, inst.graph, d);
        Matrix want = 0.85 * H + 0.1 * M;
        for (Eigen::Index u = 0; u < n; ++u) {
            if (inst.graph.is_dangling(static_cast<NodeId>(u))) want.row(u) = 0.95 * M.row(u);
            for (Eigen::Index j = 0; j < n; ++j) want(u, j) += 0.05 * v[j];
        }
        CHECK((P - want).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("subdominant eigenvalue bound") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        auto inst = testing::random_instance(seed, 40, 6, 0.3);
        std::vector<Decomposition> d{inst.blocks};
        RankingConfig cfg;
        cfg.eta = 0.7;
        cfg.mus = {0.2};
        auto P = lab::materialize_P(inst.graph, d, cfg);
        Eigen::EigenSolver<Matrix> es(P, false);
        std::vector<double> mags;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mags.push_back(std::abs(es.eigenvalues()[i]));
        std::sort(mags.rbegin(), mags.rend());
        CHECK(mags[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(mags[1] <= 0.9 + 1e-10);
    }
}

TEST_CASE("no-teleport mode gives positive scores when primitive") {
    std::size_t seen = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        auto inst = testing::random_instance(seed, 80, 6, 0.2);
        auto f = build_factors(inst.graph, inst.blocks);
        if (!check_primitivity_single(indicator_matrix(f)).primitive) continue;
        ++seen;
        std::vector<Decomposition> d{inst.blocks};
        RankingConfig cfg;
        cfg.eta = 0.85;
        cfg.mus = {0.15};
        cfg.tol = 1e-12;
        cfg.max_iters = 20000;
        auto rv = ncdawarerank(inst.graph, d, cfg);
        for (double e : rv.pi) CHECK(e > 0.0);
    }
    CHECK(seen > 0);
}

TEST_CASE("parallel kernel is bitwise reproducible across worker counts") {
    auto inst = testing::random_instance(42, 20000, 200, 0.2);
    std::vector<Decomposition> d{inst.blocks};
    std::vector<double> first;
    for (int w : {1, 2, 3, 8}) {
        RankingConfig cfg;
        cfg.workers = w;
        auto rv = ncdawarerank(inst.graph, d, cfg);
        if (first.empty())
            first = rv.pi;
        else
            CHECK(rv.pi == first);
    }
}

TEST_CASE("singleton block dangling node warns") {
    auto g = testing::graph_from("a b\nb a\nb c\n");
    std::vector<Decomposition> d{testing::blocks_from("a X\nb X\nc Y\n", g)};
    RankingConfig cfg;
    auto op = make_op(g, d, cfg);
    CHECK_FALSE(op.warnings().empty());
}

TEST_CASE("custom teleport with zeros needs no-teleport mode") {
    auto ex = eight_node();
    RankingConfig cfg;
    std::vector<double> v(8, 0.0);
    v[0] = 1.0;
    cfg.teleport = CustomTeleport{v};
    std::vector<ProximityFactors> f{build_factors(ex.g, ex.d[0])};
    CHECK_THROWS_AS(RankOperator(ex.g, f, v, cfg), InvalidArgument);
    cfg.mus = {0.15};
    CHECK_NOTHROW(RankOperator(ex.g, f, v, cfg));
}

TEST_CASE("functional rank") {
    auto inst = testing::random_instance(5, 50, 5, 0.2);
    const auto& g = inst.graph;
    const auto n = g.node_count();
    std::vector<double> v(n, 1.0 / static_cast<double>(n));

    SUBCASE("geometric weights reproduce pagerank") {
        auto fr = functional_rank(g, damping::pagerank(0.85), v);
        auto pr = pagerank(g, 0.85, UniformTeleport{}, StronglyPreferential{}, {}, 1e-13);
        CHECK(testing::l1(fr.pi, pr.pi) < 1e-8);
    }
    SUBCASE("psi concentrated at zero returns v") {
        auto fr = functional_rank(g, [](std::size_t k) { return k == 0 ? 1.0 : 0.0; }, v);
        CHECK(testing::max_abs_diff(fr.pi, v) < 1e-15);
    }
    SUBCASE("presets match a dense series") {
        Matrix H = dense_H(g);
        for (std::size_t u = 0; u < n; ++u)
            if (g.is_dangling(static_cast<NodeId>(u))) H.row(u).setConstant(1.0 / static_cast<double>(n));
        std::vector<std::pair<DampingFunction, const char*>> presets{
            {damping::total_rank(), "total"}, {damping::linear_rank(10), "linear"}, {damping::hyper_rank(3.0), "hyper"}};
        for (const auto& [psi, name] : presets) {
            CAPTURE(name);
            SeriesTruncation t;
            auto fr = functional_rank(g, psi, v, StronglyPreferential{}, {}, t);
            lab::Vector x = lab::Vector::Constant(n, 1.0 / static_cast<double>(n));
            lab::Vector acc = psi(0) * x;
            for (std::size_t k = 1; k < fr.iterations; ++k) {
                x = H.transpose() * x;
                acc += psi(k) * x;
            }
            acc /= acc.sum();
            CHECK(testing::l1(fr.pi, testing::to_std(acc)) < 1e-8);
        }
        CHECK(damping::linear_rank(10)(10) == 0.0);
        CHECK(damping::total_rank()(0) == doctest::Approx(0.5));
    }
    SUBCASE("negative weight is rejected") {
        CHECK_THROWS_AS(functional_rank(g, [](std::size_t) { return -1.0; }, v), InvalidArgument);
    }
}

TEST_CASE("convergence ratio") {
    CHECK_THROWS_AS(convergence_ratio(std::vector<double>{1, 0.5, 0.25}), InvalidArgument);
    std::vector<double> geo;
    for (int k = 0; k < 30; ++k) geo.push_back(std::pow(0.7, k));
    CHECK(convergence_ratio(geo) == doctest::Approx(0.7).epsilon(1e-10));

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto inst = testing::random_instance(seed, 2000, 20, 0.2);
        auto pr = pagerank(inst.graph, 0.85, UniformTeleport{}, StronglyPreferential{}, {}, 1e-12);
        CHECK(convergence_ratio(pr.residual_history) <= 0.87);
        std::vector<Decomposition> d{inst.blocks};
        RankingConfig cfg;
        cfg.eta = 0.85;
        cfg.mus = {0.1};
        cfg.tol = 1e-12;
        auto nr = ncdawarerank(inst.graph, d, cfg);
        CHECK(convergence_ratio(nr.residual_history) <= 0.97);
    }

    // eta + mu = 0: the first step lands on v.
    auto ex = eight_node();
    RankingConfig cfg;
    cfg.eta = 0.0;
    cfg.mus = {0.0};
    cfg.teleport = BlockBalancedTeleport{0};
    auto rv = ncdawarerank(ex.g, ex.d, cfg);
    CHECK(rv.iterations <= 2);
    CHECK(testing::max_abs_diff(rv.pi, teleport_vector(cfg.teleport, ex.g, ex.d)) < 1e-15);
}
