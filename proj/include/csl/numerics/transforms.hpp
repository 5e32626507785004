#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "csl/error.hpp"

namespace csl {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

constexpr std::size_t next_power_of_two(std::size_t n) noexcept {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace detail {

inline void fwht_stages(double* x, std::size_t len, std::size_t h_begin, std::size_t h_end) {
    std::size_t h = h_begin;
    // Stages h and 2h fused (radix 4): half the passes over memory.
    for (; 4 * h <= h_end; h <<= 2) {
        for (std::size_t i = 0; i < len; i += 4 * h) {
            double* a = x + i;
            double* b = a + h;
            double* c = b + h;
            double* d = c + h;
            for (std::size_t j = 0; j < h; ++j) {
                const double s0 = a[j] + b[j], d0 = a[j] - b[j];
                const double s1 = c[j] + d[j], d1 = c[j] - d[j];
                a[j] = s0 + s1;
                b[j] = d0 + d1;
                c[j] = s0 - s1;
                d[j] = d0 - d1;
            }
        }
    }
    for (; h < h_end; h <<= 1) {
        for (std::size_t i = 0; i < len; i += 2 * h) {
            double* a = x + i;
            double* b = x + i + h;
            for (std::size_t j = 0; j < h; ++j) {
                const double u = a[j], v = b[j];
                a[j] = u + v;
                b[j] = u - v;
            }
        }
    }
}

}  // namespace detail

/// In-place orthonormal Walsh-Hadamard transform (Sylvester ordering).
inline void fwht_inplace(std::span<double> x) {
    const std::size_t n = x.size();
    require(is_power_of_two(n), ErrorCode::LengthNotPowerOfTwo, "fwht length " + std::to_string(n));
    // Early stages run block by block so each block stays cache resident.
    constexpr std::size_t kBlock = 2048;
    const std::size_t block = n < kBlock ? n : kBlock;
    for (std::size_t b = 0; b < n; b += block) detail::fwht_stages(x.data() + b, block, 1, block);
    detail::fwht_stages(x.data(), n, block, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (double& v : x) v *= scale;
}

inline std::vector<double> fwht(std::vector<double> x) {
    fwht_inplace(x);
    return x;
}

/// Precomputed radix-2 plan for the orthonormal DFT of one length.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n), twiddle_(n / 2), bitrev_(n) {
        require(is_power_of_two(n), ErrorCode::LengthNotPowerOfTwo, "dft length " + std::to_string(n));
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = Complex(std::cos(angle), std::sin(angle));
        }
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
    }

    std::size_t size() const noexcept { return n_; }

    /// X_k = n^{-1/2} sum_j x_j exp(-2 pi i jk / n)
    void forward(std::span<Complex> x) const {
        require(x.size() == n_, ErrorCode::DimMismatch, "fft plan length mismatch");
        for (std::size_t i = 0; i < n_; ++i)
            if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const Complex t = twiddle_[j * stride] * x[i + j + half];
                    const Complex u = x[i + j];
                    x[i + j] = u + t;
                    x[i + j + half] = u - t;
                }
            }
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
        for (Complex& v : x) v *= scale;
    }

private:
    std::size_t n_;
    std::vector<Complex> twiddle_;
    std::vector<std::size_t> bitrev_;
};

inline std::vector<Complex> dft(std::span<const double> x) {
    FftPlan plan(x.size());
    std::vector<Complex> out(x.begin(), x.end());
    plan.forward(out);
    return out;
}

}  // namespace csl
