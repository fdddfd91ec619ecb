#include "ncdrank/csr.hpp"

#include <algorithm>

#include "ncdrank/error.hpp"

namespace ncd {

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    auto idx = row_indices(r);
    auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<std::uint32_t>(c));
    if (it == idx.end() || *it != c) return 0.0;
    return values[offsets[r] + static_cast<std::size_t>(it - idx.begin())];
}

CsrMatrix CsrMatrix::transpose() const {
    CsrMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.offsets.assign(cols + 1, 0);
    for (auto c : indices) ++t.offsets[c + 1];
    for (std::size_t c = 0; c < cols; ++c) t.offsets[c + 1] += t.offsets[c];
    t.indices.resize(nnz());
    t.values.resize(nnz());
    std::vector<std::size_t> cursor(t.offsets.begin(), t.offsets.end() - 1);
    // Row-major sweep keeps each transposed row sorted.
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e) {
            auto pos = cursor[indices[e]]++;
            t.indices[pos] = static_cast<std::uint32_t>(r);
            t.values[pos] = values[e];
        }
    }
    return t;
}

std::vector<double> CsrMatrix::to_dense() const {
    std::vector<double> d(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t e = offsets[r]; e < offsets[r + 1]; ++e) d[r * cols + indices[e]] = values[e];
    return d;
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.cols != b.rows) throw InvalidArgument("multiply: inner dimensions differ");
    CsrMatrix c;
    c.rows = a.rows;
    c.cols = b.cols;
    c.offsets.reserve(a.rows + 1);
    std::vector<double> acc(b.cols, 0.0);
    std::vector<char> touched(b.cols, 0);
    std::vector<std::uint32_t> cols;
    for (std::size_t r = 0; r < a.rows; ++r) {
        cols.clear();
        for (std::size_t e = a.offsets[r]; e < a.offsets[r + 1]; ++e) {
            const auto k = a.indices[e];
            const double av = a.values[e];
            for (std::size_t f = b.offsets[k]; f < b.offsets[k + 1]; ++f) {
                const auto j = b.indices[f];
                if (!touched[j]) {
                    touched[j] = 1;
                    cols.push_back(j);
                }
                acc[j] += av * b.values[f];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (auto j : cols) {
            c.indices.push_back(j);
            c.values.push_back(acc[j]);
            acc[j] = 0.0;
            touched[j] = 0;
        }
        c.offsets.push_back(c.indices.size());
    }
    return c;
}

}  // namespace ncd
