#include "ncdrank/kernels.hpp"

#include <algorithm>
#include <vector>

#include <omp.h>

namespace ncd::kernels {

namespace {

std::size_t chunk_count(std::size_t n) { return (n + kReduceChunk - 1) / kReduceChunk; }

template <class F>
double chunked_reduce(std::size_t n, int workers, F&& term) {
    const auto chunks = chunk_count(n);
    std::vector<double> partial(chunks, 0.0);
    const auto c_end = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static) num_threads(workers) if (chunks > 1)
    for (std::ptrdiff_t c = 0; c < c_end; ++c) {
        const auto lo = static_cast<std::size_t>(c) * kReduceChunk;
        const auto hi = std::min(n, lo + kReduceChunk);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<std::size_t>(c)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace

int resolve_workers(int requested) noexcept {
    return requested > 0 ? requested : std::max(1, omp_get_max_threads());
}

double sum(std::span<const double> x, int workers) {
    return chunked_reduce(x.size(), workers, [&](std::size_t i) { return x[i]; });
}

double l1_distance(std::span<const double> x, std::span<const double> y, int workers) {
    return chunked_reduce(x.size(), workers, [&](std::size_t i) {
        const double d = x[i] - y[i];
        return d < 0 ? -d : d;
    });
}

double masked_sum(std::span<const double> x, std::span<const unsigned char> mask, int workers) {
    return chunked_reduce(x.size(), workers, [&](std::size_t i) { return mask[i] ? x[i] : 0.0; });
}

void pull_spmv_add(const CsrMatrix& m, std::span<const double> x, std::span<double> y, int workers) {
    const auto rows = static_cast<std::ptrdiff_t>(m.rows);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const auto lo = m.offsets[static_cast<std::size_t>(r)];
        const auto hi = m.offsets[static_cast<std::size_t>(r) + 1];
        for (auto e = lo; e < hi; ++e) acc += m.values[e] * x[m.indices[e]];
        y[static_cast<std::size_t>(r)] += acc;
    }
}

void push_spmv_add(const CsrMatrix& m, std::span<const double> x, std::span<double> y) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (auto e = m.offsets[r]; e < m.offsets[r + 1]; ++e) y[m.indices[e]] += xr * m.values[e];
    }
}

void scale(std::span<double> x, double a, int workers) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] *= a;
}

}  // namespace ncd::kernels
