#pragma once

#include <cstddef>
#include <span>

#include "ncdrank/csr.hpp"

// Low-level vector kernels shared by the solvers. Every reduction sums
// fixed-size chunks and then adds the chunk totals in index order, so results
// do not depend on the number of threads.

namespace ncd::kernels {

inline constexpr std::size_t kReduceChunk = 4096;

/// Worker count to use: `requested` if positive, else the OpenMP default.
int resolve_workers(int requested) noexcept;

double sum(std::span<const double> x, int workers);
double l1_distance(std::span<const double> x, std::span<const double> y, int workers);
/// Sum of x[i] over i with mask[i] set.
double masked_sum(std::span<const double> x, std::span<const unsigned char> mask, int workers);

/// y[r] += sum_j m(r, j) * x[j] for every row r of m. Rows are independent,
/// so this is the pull form when m is stored as the transpose of the operator.
void pull_spmv_add(const CsrMatrix& m, std::span<const double> x, std::span<double> y, int workers);

/// y[c] += sum_r x[r] * m(r, c), serial scatter over rows.
void push_spmv_add(const CsrMatrix& m, std::span<const double> x, std::span<double> y);

void scale(std::span<double> x, double a, int workers);

}  // namespace ncd::kernels
