#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ncd {

/// Minimal compressed-sparse-row matrix of doubles. Column indices within a
/// row are kept sorted by every constructor in this library.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return indices.size(); }

    std::span<const std::uint32_t> row_indices(std::size_t r) const {
        return {indices.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }

    /// Entry (r, c), zero when structurally absent. Binary search within the row.
    double at(std::size_t r, std::size_t c) const;

    CsrMatrix transpose() const;

    /// Dense row-major copy; only meant for small matrices in tests and reports.
    std::vector<double> to_dense() const;
};

/// Sparse product A*B. Output rows have sorted column indices.
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);

}  // namespace ncd
