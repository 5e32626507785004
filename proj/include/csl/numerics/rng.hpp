#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "csl/error.hpp"

namespace csl {

// SplitMix64 finalizer; used to derive independent per-task seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// base ^ hash(task...)
template <typename... Ts>
constexpr std::uint64_t derive_seed(std::uint64_t base, Ts... task) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    ((h = mix64(h ^ static_cast<std::uint64_t>(task))), ...);
    return base ^ h;
}

/**
 * Seeded random stream on top of std::mt19937_64.
 *
 * Uniforms use the top 53 bits of each draw; normals come from the Marsaglia
 * polar method, so sequences are identical across standard libraries (unlike
 * std::normal_distribution).
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection (no modulo bias).
    std::uint64_t uniform_index(std::uint64_t bound) {
        const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= limit) return r % bound;
        }
    }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

    std::vector<double> gaussian_vector(std::size_t count) {
        std::vector<double> out(count);
        for (double& x : out) x = gaussian();
        return out;
    }

    std::vector<double> rademacher_vector(std::size_t count) {
        std::vector<double> out(count);
        for (double& x : out) x = rademacher();
        return out;
    }

    /// Uniformly random `count`-subset of [0, population), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t count) {
        require(count <= population, ErrorCode::CountExceedsPopulation,
                "cannot draw " + std::to_string(count) + " from " + std::to_string(population));
        // Partial Fisher-Yates; dense pool is fine at the sizes used here.
        std::vector<std::size_t> pool(population);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_index(population - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(count);
        return pool;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace csl
