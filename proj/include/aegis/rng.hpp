#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace aegis::rng {

// splitmix64 finalizer; the one mixing function used to derive child seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for stream `stream` of a run seeded with `base` (tree index, profile
// index, fold index, ...). All randomized stages derive their seeds this way
// so a single top-level seed reproduces a whole run.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return mix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// Deterministic PRNG pinned for the whole project: the mt19937_64 core (its
// output sequence is fixed by the C++ standard) with hand-rolled bounded
// draws and samplers, since the std::*_distribution adaptors are
// implementation-defined and would break cross-toolchain reproducibility.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, bound), bound >= 1, by rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % bound;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return x % bound;
    }

    // Uniform double in [0, 1), 53 bits.
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1), endpoints excluded.
    double next_unit_open() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

    // Standard normal via Box-Muller, one value per call (no cached spare, so
    // the number of draws per sample is fixed).
    double next_normal() {
        const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    // Laplace(0, b) via inverse CDF; b >= 0.
    double next_laplace(double b) {
        const double u = next_unit_open() - 0.5;
        const double mag = -b * std::log(1.0 - 2.0 * std::abs(u));
        return u < 0 ? -mag : mag;
    }

    // In-place Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Random permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

    // k distinct values from [0, n), returned ascending (partial Fisher-Yates).
    std::vector<int> sample_distinct(int n, int k) {
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) +
                static_cast<std::size_t>(next_below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(k));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace aegis::rng
