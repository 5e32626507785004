#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the library routine it is meant to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include "csl/numerics/matrix.hpp"
#include "csl/numerics/rng.hpp"

namespace csl::oracle {

/// Direct O(N^2) orthonormal DFT.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
            s += x[j] * std::complex<double>(std::cos(a), std::sin(a));
        }
        out[k] = s / std::sqrt(static_cast<double>(n));
    }
    return out;
}

/// Dense normalized Sylvester Hadamard matrix built by the Kronecker recursion.
inline Matrix dense_hadamard(std::size_t n) {
    Matrix h(1, 1);
    h(0, 0) = 1.0;
    while (h.rows() < n) {
        const std::size_t m = h.rows();
        Matrix next(2 * m, 2 * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                next(i, j) = h(i, j);
                next(i, j + m) = h(i, j);
                next(i + m, j) = h(i, j);
                next(i + m, j + m) = -h(i, j);
            }
        h = next;
    }
    return h * (1.0 / std::sqrt(static_cast<double>(n)));
}

/// Singular values of a 2x2 matrix from the eigenvalues of m^T m (closed form).
inline std::pair<double, double> svd2x2(double a, double b, double c, double d) {
    // m = [[a, b], [c, d]]; trace(m^T m) = a^2 + b^2 + c^2 + d^2
    const double tr = a * a + b * b + c * c + d * d;
    const double det = std::abs(a * d - b * c);  // sqrt(det(m^T m)) = |det m|
    // sigma1 * sigma2 = |det m|, sigma1^2 + sigma2^2 = tr
    const double s_plus = std::sqrt(tr + 2.0 * det);   // sigma1 + sigma2
    const double s_minus = std::sqrt(std::max(0.0, tr - 2.0 * det));  // sigma1 - sigma2
    const double s1 = (s_plus + s_minus) / 2.0;
    // the difference form cancels badly for a small sigma2; use sigma1 sigma2 = |det m|
    return {s1, s1 > 0.0 ? det / s1 : 0.0};
}

namespace detail {

inline std::vector<double> unit_in(const Matrix& basis, double angle) {
    std::vector<double> v(basis.rows(), 0.0);
    if (basis.cols() == 1) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = basis(i, 0);
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::cos(angle) * basis(i, 0) + std::sin(angle) * basis(i, 1);
    }
    return v;
}

inline double abs_cos(const Matrix& a, double ta, const Matrix& b, double tb) {
    const auto u = unit_in(a, ta);
    const auto v = unit_in(b, tb);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return std::abs(s);
}

}  // namespace detail

/**
 * Canonical angles of subspaces with orthonormal bases of 1 or 2 columns,
 * straight from the variational definition: theta_1 maximizes |u^T v| over
 * unit u in A and v in B (grid search over the two circles, then repeated
 * local refinement); theta_2 is then the angle between the directions
 * orthogonal to the first pair within each subspace.
 */
inline std::vector<double> brute_force_angles(const Matrix& a, const Matrix& b) {
    const double pi = std::numbers::pi;
    const bool a_line = a.cols() == 1, b_line = b.cols() == 1;
    const int coarse = 720;
    double best = -1.0, ba = 0.0, bb = 0.0;
    const int na = a_line ? 1 : coarse, nb = b_line ? 1 : coarse;
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double ta = pi * i / coarse, tb = pi * j / coarse;
            const double c = detail::abs_cos(a, ta, b, tb);
            if (c > best) best = c, ba = ta, bb = tb;
        }
    double step = pi / coarse;
    while (step > 1e-9) {
        const int k = 10;
        double lb = best, la = ba, lb2 = bb;
        for (int i = -k; i <= k; ++i)
            for (int j = -k; j <= k; ++j) {
                const double ta = a_line ? 0.0 : ba + step * i / k;
                const double tb = b_line ? 0.0 : bb + step * j / k;
                const double c = detail::abs_cos(a, ta, b, tb);
                if (c > lb) lb = c, la = ta, lb2 = tb;
            }
        best = lb, ba = la, bb = lb2;
        step /= 4.0;
    }
    std::vector<double> out{std::acos(std::min(1.0, best))};
    if (!a_line && !b_line) out.push_back(std::acos(std::min(1.0, detail::abs_cos(a, ba + pi / 2, b, bb + pi / 2))));
    return out;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) { return Matrix(r, c, rng.gaussian_vector(r * c)); }

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

inline double orthogonality_error(const Matrix& q) {
    double m = 0.0;
    for (std::size_t i = 0; i < q.cols(); ++i)
        for (std::size_t j = 0; j < q.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < q.rows(); ++k) s += q(k, i) * q(k, j);
            m = std::max(m, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    return m;
}

}  // namespace csl::oracle
