#include "ncdrank/ncdlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "ncdrank/error.hpp"
#include "text_util.hpp"

namespace ncd::lab {

StatePartition StatePartition::from_sizes(std::span<const std::size_t> sizes) {
    StatePartition p;
    p.starts.push_back(0);
    for (auto s : sizes) {
        if (s == 0) throw InvalidArgument("partition cluster of size 0");
        p.starts.push_back(p.starts.back() + s);
    }
    return p;
}

StatePartition StatePartition::from_groups(const std::vector<std::vector<std::size_t>>& groups) {
    StatePartition p;
    p.starts.push_back(0);
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidArgument("partition cluster of size 0");
        p.order.insert(p.order.end(), g.begin(), g.end());
        p.starts.push_back(p.order.size());
    }
    std::vector<char> seen(p.order.size(), 0);
    for (auto s : p.order) {
        if (s >= seen.size() || seen[s]) throw InvalidArgument("partition groups must list each state exactly once");
        seen[s] = 1;
    }
    return p;
}

void StatePartition::validate(std::size_t n) const {
    if (starts.size() < 2 || starts.front() != 0) throw InvalidArgument("partition has no clusters");
    if (starts.back() != n)
        throw InvalidArgument("partition covers " + std::to_string(starts.back()) + " states, matrix has " +
                              std::to_string(n));
    for (std::size_t i = 0; i + 1 < starts.size(); ++i)
        if (starts[i + 1] <= starts[i]) throw InvalidArgument("partition cluster of size 0");
    if (!order.empty() && order.size() != n) throw InvalidArgument("partition order length differs from state count");
}

namespace {

std::vector<std::string_view> split_any(std::string_view s, std::string_view seps) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && seps.find(s[i]) != std::string_view::npos) ++i;
        if (i == s.size()) break;
        auto j = i;
        while (j < s.size() && seps.find(s[j]) == std::string_view::npos) ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::size_t parse_index(std::string_view s) {
    auto v = detail::parse_double(s);
    if (!v || *v < 0 || *v != std::floor(*v)) throw InvalidArgument("bad partition entry '" + std::string(s) + "'");
    return static_cast<std::size_t>(*v);
}

Matrix block(const Matrix& Pp, const StatePartition& part, std::size_t I, std::size_t J) {
    return Pp.block(static_cast<Eigen::Index>(part.starts[I]), static_cast<Eigen::Index>(part.starts[J]),
                    static_cast<Eigen::Index>(part.cluster_size(I)), static_cast<Eigen::Index>(part.cluster_size(J)));
}

bool pattern_irreducible(const Matrix& B) {
    const auto n = static_cast<std::size_t>(B.rows());
    std::vector<std::size_t> offsets{0};
    std::vector<NodeId> targets;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) targets.push_back(static_cast<NodeId>(j));
        offsets.push_back(targets.size());
    }
    return strongly_connected_components(AdjacencyView{offsets, targets}).component_count == 1;
}

Vector unreorder(const Vector& x, const StatePartition& part) {
    if (part.order.empty()) return x;
    Vector out(x.size());
    for (Eigen::Index p = 0; p < x.size(); ++p) out(static_cast<Eigen::Index>(part.order[static_cast<std::size_t>(p)])) = x(p);
    return out;
}

Matrix coupling_reordered(const Matrix& Pp, const StatePartition& part, std::span<const Vector> dists) {
    const auto L = part.cluster_count();
    if (dists.size() != L) throw InvalidArgument("one distribution per cluster is required");
    Matrix C(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    for (std::size_t I = 0; I < L; ++I) {
        if (static_cast<std::size_t>(dists[I].size()) != part.cluster_size(I))
            throw InvalidArgument("cluster distribution length differs from cluster size");
        for (std::size_t J = 0; J < L; ++J)
            C(static_cast<Eigen::Index>(I), static_cast<Eigen::Index>(J)) =
                dists[I].dot(block(Pp, part, I, J).rowwise().sum());
    }
    return C;
}

Vector combine(const StatePartition& part, const Vector& xi, std::span<const Vector> dists) {
    Vector pi(static_cast<Eigen::Index>(part.state_count()));
    for (std::size_t I = 0; I < part.cluster_count(); ++I)
        pi.segment(static_cast<Eigen::Index>(part.starts[I]), static_cast<Eigen::Index>(part.cluster_size(I))) =
            xi(static_cast<Eigen::Index>(I)) * dists[I];
    return unreorder(pi, part);
}

}  // namespace

StatePartition parse_partition(const std::string& text) {
    if (text.find(';') != std::string::npos) {
        std::vector<std::vector<std::size_t>> groups;
        for (auto g : split_any(text, ";")) {
            std::vector<std::size_t> grp;
            for (auto f : split_any(g, ", \t")) grp.push_back(parse_index(f));
            groups.push_back(std::move(grp));
        }
        return StatePartition::from_groups(groups);
    }
    std::vector<std::size_t> sizes;
    for (auto f : split_any(text, ", \t")) sizes.push_back(parse_index(f));
    if (sizes.empty()) throw InvalidArgument("empty partition specification");
    return StatePartition::from_sizes(sizes);
}

Matrix reorder(const Matrix& P, const StatePartition& part) {
    part.validate(static_cast<std::size_t>(P.rows()));
    if (part.order.empty()) return P;
    const auto n = P.rows();
    Matrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = P(static_cast<Eigen::Index>(part.order[static_cast<std::size_t>(i)]),
                          static_cast<Eigen::Index>(part.order[static_cast<std::size_t>(j)]));
    return out;
}

void validate_stochastic(const Matrix& P) {
    if (P.rows() == 0 || P.rows() != P.cols()) throw InvalidArgument("matrix must be square and non-empty");
    if (!P.allFinite()) throw InvalidArgument("matrix has non-finite entries");
    if (P.minCoeff() < -1e-14) throw InvalidArgument("matrix has negative entries");
    for (Eigen::Index i = 0; i < P.rows(); ++i)
        if (std::abs(P.row(i).sum() - 1.0) > 1e-10)
            throw InvalidArgument("row " + std::to_string(i) + " does not sum to 1");
}

Vector stationary_dense(const Matrix& P) {
    validate_stochastic(P);
    const auto n = P.rows();
    Matrix A = P + Matrix::Ones(n, n) - Matrix::Identity(n, n);
    Eigen::FullPivLU<Matrix> lu(A.transpose());
    if (!lu.isInvertible()) throw NumericError("stationary solve is singular (chain is reducible)");
    Vector x = lu.solve(Vector::Ones(n));
    if (!x.allFinite()) throw NumericError("stationary solve produced non-finite values");
    return x / x.sum();
}

double coupling_degree(const Matrix& P, const StatePartition& part) {
    const Matrix Pp = reorder(P, part);
    double eps = 0.0;
    for (std::size_t I = 0; I < part.cluster_count(); ++I) {
        const auto lo = static_cast<Eigen::Index>(part.starts[I]);
        const auto len = static_cast<Eigen::Index>(part.cluster_size(I));
        for (Eigen::Index r = lo; r < lo + len; ++r) {
            const double inside = Pp.row(r).segment(lo, len).sum();
            eps = std::max(eps, Pp.row(r).sum() - inside);
        }
    }
    return eps;
}

Matrix coupling_matrix(const Matrix& P, const StatePartition& part, std::span<const Vector> distributions) {
    return coupling_reordered(reorder(P, part), part, distributions);
}

NcdApproximation ncd_approximate(const Matrix& P, const StatePartition& part,
                                 const StochasticityAdjustment& adjustment) {
    validate_stochastic(P);
    const Matrix Pp = reorder(P, part);
    const auto L = part.cluster_count();
    NcdApproximation out;
    if (const auto* s = std::get_if<SuppliedBlocks>(&adjustment); s && s->blocks.size() != L)
        throw InvalidArgument("supplied blocks: expected one per cluster");

    for (std::size_t I = 0; I < L; ++I) {
        Matrix B = block(Pp, part, I, I);
        if (const auto* s = std::get_if<SuppliedBlocks>(&adjustment)) {
            if (s->blocks[I].rows() != B.rows() || s->blocks[I].cols() != B.cols())
                throw InvalidArgument("supplied block " + std::to_string(I) + " has the wrong shape");
            B = s->blocks[I];
            validate_stochastic(B);
        } else if (std::holds_alternative<ProportionalAdjustment>(adjustment)) {
            for (Eigen::Index r = 0; r < B.rows(); ++r) {
                const double rs = B.row(r).sum();
                if (!(rs > 0.0)) throw NumericError("block " + std::to_string(I) + " has an all-zero row");
                B.row(r) /= rs;
            }
        } else {
            for (Eigen::Index r = 0; r < B.rows(); ++r) B(r, r) += 1.0 - B.row(r).sum();
        }
        if (!pattern_irreducible(B))
            throw NumericError("adjusted diagonal block " + std::to_string(I) + " is reducible");
        out.block_distributions.push_back(stationary_dense(B));
        out.adjusted_blocks.push_back(std::move(B));
    }
    out.coupling = coupling_reordered(Pp, part, out.block_distributions);
    // Fully decoupled chain: any xi is stationary for C = I, take the uniform one.
    const Matrix off = out.coupling - Matrix(out.coupling.diagonal().asDiagonal());
    out.xi = (off.array() == 0.0).all() ? Vector::Constant(static_cast<Eigen::Index>(L), 1.0 / static_cast<double>(L))
                                        : stationary_dense(out.coupling);
    out.pi_tilde = combine(part, out.xi, out.block_distributions);
    return out;
}

Matrix stochastic_complement(const Matrix& P, const StatePartition& part, std::size_t I) {
    const Matrix Pp = reorder(P, part);
    if (I >= part.cluster_count()) throw InvalidArgument("cluster index out of range");
    const auto n = Pp.rows();
    const auto lo = static_cast<Eigen::Index>(part.starts[I]);
    const auto len = static_cast<Eigen::Index>(part.cluster_size(I));
    const auto rest = n - len;
    Matrix Pii = Pp.block(lo, lo, len, len);
    if (rest == 0) return Pii;
    // No exit from the cluster: the correction term vanishes whatever the resolvent.
    if ((Pp.block(lo, 0, len, lo).array() == 0.0).all() && (Pp.block(lo, lo + len, len, rest - lo).array() == 0.0).all())
        return Pii;

    std::vector<Eigen::Index> others;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i < lo || i >= lo + len) others.push_back(i);
    Matrix Pio(len, rest), Poi(rest, len), Poo(rest, rest);
    for (Eigen::Index a = 0; a < rest; ++a) {
        for (Eigen::Index r = 0; r < len; ++r) {
            Pio(r, a) = Pp(lo + r, others[static_cast<std::size_t>(a)]);
            Poi(a, r) = Pp(others[static_cast<std::size_t>(a)], lo + r);
        }
        for (Eigen::Index b = 0; b < rest; ++b)
            Poo(a, b) = Pp(others[static_cast<std::size_t>(a)], others[static_cast<std::size_t>(b)]);
    }
    Eigen::FullPivLU<Matrix> lu(Matrix::Identity(rest, rest) - Poo);
    if (!lu.isInvertible()) throw NumericError("stochastic complement resolvent is singular");
    return Pii + Pio * lu.solve(Poi);
}

Complementation exact_via_complementation(const Matrix& P, const StatePartition& part) {
    validate_stochastic(P);
    part.validate(static_cast<std::size_t>(P.rows()));
    Complementation out;
    for (std::size_t I = 0; I < part.cluster_count(); ++I) {
        out.complements.push_back(stochastic_complement(P, part, I));
        out.complement_distributions.push_back(stationary_dense(out.complements.back()));
    }
    out.coupling = coupling_matrix(P, part, out.complement_distributions);
    out.xi = stationary_dense(out.coupling);
    out.pi = combine(part, out.xi, out.complement_distributions);
    return out;
}

Matrix materialize_P(const SparseGraph& g, std::span<const Decomposition> decomps, const RankingConfig& cfg,
                     std::size_t cap) {
    cfg.validate(decomps.size());
    const auto n = g.node_count();
    if (n > cap)
        throw InvalidArgument("dense materialization of " + std::to_string(n) + " nodes exceeds the cap of " +
                              std::to_string(cap));
    const auto v = teleport_vector(cfg.teleport, g, decomps);
    const auto N = static_cast<Eigen::Index>(n);
    Matrix P = Matrix::Zero(N, N);

    // M_i(u, w) = sum over proximal blocks k of u containing w of 1 / (N_u |D_k|).
    std::vector<Matrix> M;
    for (const auto& d : decomps) {
        auto prox = proximal_sets(g, d);
        Matrix Mi = Matrix::Zero(N, N);
        for (std::size_t u = 0; u < n; ++u) {
            const double nu = static_cast<double>(prox.count(static_cast<NodeId>(u)));
            for (auto k : prox.proximal_blocks[u])
                for (auto w : d.block(k))
                    Mi(static_cast<Eigen::Index>(u), w) += 1.0 / (nu * static_cast<double>(d.block_size(k)));
        }
        M.push_back(std::move(Mi));
    }

    for (std::size_t u = 0; u < n; ++u) {
        const auto r = static_cast<Eigen::Index>(u);
        if (!g.is_dangling(static_cast<NodeId>(u))) {
            const double h = 1.0 / static_cast<double>(g.out_degree(static_cast<NodeId>(u)));
            for (auto w : g.out_neighbors(static_cast<NodeId>(u))) P(r, w) += cfg.eta * h;
        } else if (std::holds_alternative<StronglyPreferential>(cfg.dangling)) {
            for (std::size_t w = 0; w < n; ++w) P(r, static_cast<Eigen::Index>(w)) += cfg.eta * v[w];
        } else if (const auto* wp = std::get_if<WeaklyPreferential>(&cfg.dangling)) {
            if (wp->f.size() != n) throw InvalidArgument("weak-preferential patch has the wrong length");
            for (std::size_t w = 0; w < n; ++w) P(r, static_cast<Eigen::Index>(w)) += cfg.eta * wp->f[w];
        } else {
            P.row(r) += cfg.eta * M[std::get<NcdAwareDangling>(cfg.dangling).decomposition].row(r);
        }
    }
    for (std::size_t i = 0; i < M.size(); ++i) P += cfg.mus[i] * M[i];
    const double tau = cfg.teleport_weight();
    for (Eigen::Index r = 0; r < N; ++r)
        for (Eigen::Index c = 0; c < N; ++c) P(r, c) += tau * v[static_cast<std::size_t>(c)];
    return P;
}

namespace {

std::vector<std::vector<double>> read_rows(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_fields(line, '#', ',');
        if (fields.empty()) continue;
        std::vector<double> row;
        for (auto f : fields) {
            auto x = detail::parse_double(f);
            if (!x) throw ParseError("not a number: '" + std::string(f) + "'", lineno);
            row.push_back(*x);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("matrix is empty", 0);
    return rows;
}

}  // namespace

Matrix read_csv(std::istream& in) {
    const auto rows = read_rows(in);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw ParseError("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                                 " columns, expected " + std::to_string(rows.front().size()),
                             0);
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

std::vector<Matrix> read_stacked_blocks(std::istream& in, const StatePartition& part) {
    const auto rows = read_rows(in);
    std::vector<Matrix> out;
    std::size_t r = 0;
    for (std::size_t I = 0; I < part.cluster_count(); ++I) {
        const auto k = part.cluster_size(I);
        if (r + k > rows.size()) throw InvalidArgument("stacked blocks: too few rows for the partition");
        Matrix b(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i, ++r) {
            if (rows[r].size() != k)
                throw InvalidArgument("stacked blocks: row " + std::to_string(r + 1) + " should have " +
                                      std::to_string(k) + " entries");
            for (std::size_t j = 0; j < k; ++j) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[r][j];
        }
        out.push_back(std::move(b));
    }
    if (r != rows.size()) throw InvalidArgument("stacked blocks: more rows than the partition has states");
    return out;
}

std::vector<Matrix> read_stacked_blocks_file(const std::string& path, const StatePartition& part) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open matrix file: " + path);
    return read_stacked_blocks(f, part);
}

Matrix read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open matrix file: " + path);
    return read_csv(f);
}

void write_csv(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_sig17(m(i, j));
        }
        out << '\n';
    }
}

void write_csv(std::ostream& out, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << detail::format_sig17(v(i));
    }
    out << '\n';
}

}  // namespace ncd::lab
