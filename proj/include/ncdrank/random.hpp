#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace ncd {

/// Seeded 64-bit generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; bounded draws use plain rejection
/// sampling instead of std::uniform_int_distribution so results do not
/// depend on the standard library.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x < threshold);
        return x % n;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// k distinct indices from [0, m), sorted ascending (partial Fisher-Yates).
    std::vector<std::uint64_t> sample(std::uint64_t m, std::uint64_t k) {
        std::vector<std::uint64_t> idx(m);
        for (std::uint64_t i = 0; i < m; ++i) idx[i] = i;
        for (std::uint64_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + below(m - i)]);
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ncd
