#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/numerics/rng.hpp"

namespace csl {

struct SvdResult {
    Matrix left;                  // rows x k, orthonormal columns
    Vector singular_values;       // k = min(rows, cols), nonincreasing
    Matrix right;                 // cols x k, orthonormal columns
};

struct EigResult {
    Vector eigenvalues;           // nonincreasing
    Matrix eigenvectors;          // unit-norm columns, paired with eigenvalues
};

inline constexpr int kMaxJacobiSweeps = 100;

namespace detail {

inline std::vector<Vector> to_columns(const Matrix& m) {
    std::vector<Vector> cols(m.cols(), Vector(m.rows()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) cols[j][i] = m(i, j);
    return cols;
}

inline Matrix from_columns(const std::vector<Vector>& cols, std::size_t rows) {
    Matrix m(rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
    return m;
}

inline void axpy(double a, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Two passes of modified Gram-Schmidt of v against basis[0..count). Returns ||v|| afterwards.
inline double reorthogonalize(Vector& v, const std::vector<Vector>& basis, std::size_t count) {
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t i = 0; i < count; ++i) axpy(-dot(basis[i], v), basis[i], v);
    return norm2(v);
}

// Fills zero columns of an otherwise orthonormal set with unit vectors orthogonal to the rest.
inline void complete_orthonormal(std::vector<Vector>& cols, const std::vector<bool>& missing) {
    if (cols.empty()) return;
    const std::size_t n = cols.front().size();
    std::vector<Vector> accepted;
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (!missing[j]) accepted.push_back(cols[j]);
    std::size_t candidate = 0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (!missing[j]) continue;
        for (;; ++candidate) {
            if (candidate >= n) fail(ErrorCode::NoConvergence, "cannot complete orthonormal basis");
            Vector e(n, 0.0);
            e[candidate] = 1.0;
            const double r = reorthogonalize(e, accepted, accepted.size());
            if (r > 0.5) {
                for (double& x : e) x /= r;
                cols[j] = e;
                accepted.push_back(std::move(e));
                ++candidate;
                break;
            }
        }
    }
}

// One-sided Jacobi on a tall (rows >= cols) matrix.
inline SvdResult jacobi_svd_tall(const Matrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t n = m.cols();
    std::vector<Vector> u = to_columns(m);
    std::vector<Vector> v(n, Vector(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    // Rounding in a length-`rows` dot product limits how orthogonal two columns can get.
    const double tol = std::max(1e-15, 8.0 * 2.220446049250313e-16 * std::sqrt(static_cast<double>(rows)));
    bool converged = n < 2;
    for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = dot(u[p], u[p]);
                const double beta = dot(u[q], u[q]);
                const double gamma = dot(u[p], u[q]);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double a = u[p][i], b = u[q][i];
                    u[p][i] = c * a - s * b;
                    u[q][i] = s * a + c * b;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = v[p][i], b = v[q][i];
                    v[p][i] = c * a - s * b;
                    v[q][i] = s * a + c * b;
                }
            }
        }
        converged = !rotated;
    }
    if (!converged) fail(ErrorCode::NoConvergence, "one-sided Jacobi SVD exceeded sweep cap");

    Vector sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(u[j]);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

    SvdResult out;
    out.singular_values.resize(n);
    std::vector<Vector> left(n), right(n);
    std::vector<bool> missing(n, false);
    const double smax = n == 0 ? 0.0 : sigma[order.front()];
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        out.singular_values[k] = sigma[j];
        right[k] = v[j];
        left[k] = u[j];
        if (sigma[j] <= 1e-300 || !(sigma[j] > 0.0)) {
            missing[k] = true;
            std::fill(left[k].begin(), left[k].end(), 0.0);
            continue;
        }
        for (double& x : left[k]) x /= sigma[j];
    }
    // Tiny singular values carry little information about their left vector's direction; clean up.
    for (std::size_t k = 0; k < n; ++k) {
        if (missing[k] || out.singular_values[k] > 1e-8 * smax) continue;
        const double r = reorthogonalize(left[k], left, k);
        if (r > 0.5) {
            for (double& x : left[k]) x /= r;
        } else {
            missing[k] = true;
        }
    }
    if (std::find(missing.begin(), missing.end(), true) != missing.end()) complete_orthonormal(left, missing);
    out.left = from_columns(left, rows);
    out.right = from_columns(right, n);
    return out;
}

}  // namespace detail

/**
 * Orthonormal basis for the column span of `m`.
 *
 * Columns are scaled to unit norm and then orthogonalized by modified
 * Gram-Schmidt with one full re-orthogonalization pass. A column whose
 * residual after orthogonalization falls below 1e-10 marks the input as
 * numerically rank deficient.
 */
inline Matrix orthonormalize(const Matrix& m) {
    require(m.all_finite(), ErrorCode::NonFinite, "orthonormalize input");
    if (m.cols() > m.rows())
        fail(ErrorCode::RankDeficient, "more columns (" + std::to_string(m.cols()) + ") than rows");
    std::vector<Vector> cols = detail::to_columns(m);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const double n0 = norm2(cols[j]);
        if (!(n0 > 0.0)) fail(ErrorCode::RankDeficient, "zero column " + std::to_string(j));
        for (double& x : cols[j]) x /= n0;
        const double r = detail::reorthogonalize(cols[j], cols, j);
        if (r < 1e-10) fail(ErrorCode::RankDeficient, "column " + std::to_string(j) + " is numerically dependent");
        for (double& x : cols[j]) x /= r;
    }
    return detail::from_columns(cols, m.rows());
}

/// Thin SVD by one-sided Jacobi; k = min(rows, cols) triplets.
inline SvdResult thin_svd(const Matrix& m) {
    require(m.rows() >= 1 && m.cols() >= 1, ErrorCode::BadDims, "thin_svd of empty matrix");
    require(m.all_finite(), ErrorCode::NonFinite, "thin_svd input");
    if (m.rows() >= m.cols()) return detail::jacobi_svd_tall(m);
    SvdResult t = detail::jacobi_svd_tall(m.transposed());
    std::swap(t.left, t.right);
    return t;
}

inline Vector singular_values(const Matrix& m) { return thin_svd(m).singular_values; }

/// Symmetric eigendecomposition by cyclic Jacobi with threshold sweeps.
inline EigResult sym_eig(const Matrix& m) {
    require(m.rows() == m.cols(), ErrorCode::NotSymmetric, "sym_eig needs a square matrix");
    require(m.all_finite(), ErrorCode::NonFinite, "sym_eig input");
    const std::size_t n = m.rows();
    const double scale = std::max(1.0, m.max_abs());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-10 * scale)
                fail(ErrorCode::NotSymmetric, "asymmetry at (" + std::to_string(i) + "," + std::to_string(j) + ")");

    Matrix a = m;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
    Matrix v = Matrix::identity(n);
    const double total = a.frobenius_norm();

    bool converged = false;
    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        double off_abs = 0.0, off_sq = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                off_abs += std::abs(a(p, q));
                off_sq += a(p, q) * a(p, q);
            }
        if (off_abs == 0.0 || std::sqrt(2.0 * off_sq) <= 1e-16 * total) {
            converged = true;
            break;
        }
        const double threshold = sweep < 3 ? 0.2 * off_abs / static_cast<double>(n * n) : 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                const double g = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
                    std::abs(a(q, q)) + g == std::abs(a(q, q))) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                if (std::abs(apq) <= threshold || apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(1.0, theta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                auto rp = a.row(p);
                auto rq = a.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = rp[k], aqk = rq[k];
                    rp[k] = c * apk - s * aqk;
                    rq[k] = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged) fail(ErrorCode::NoConvergence, "Jacobi eigensolver exceeded sweep cap");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    EigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Lower-triangular L with L L^T = m; m must be symmetric positive definite.
inline Matrix cholesky(const Matrix& m) {
    require(m.rows() == m.cols(), ErrorCode::BadDims, "cholesky needs a square matrix");
    const std::size_t n = m.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) fail(ErrorCode::InvalidArgument, "matrix is not positive definite");
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

/// Orthonormalized rows x cols Gaussian matrix: a Haar-distributed orthonormal frame.
inline Matrix random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
    require(cols >= 1 && cols <= rows, ErrorCode::BadDims, "random_orthonormal needs 1 <= cols <= rows");
    for (;;) {
        Matrix g(rows, cols, rng.gaussian_vector(rows * cols));
        try {
            return orthonormalize(g);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RankDeficient) throw;
        }
    }
}

}  // namespace csl
