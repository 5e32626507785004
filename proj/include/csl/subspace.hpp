#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/linalg.hpp"
#include "csl/numerics/matrix.hpp"

namespace csl {

/// A d-dimensional linear subspace of R^N held as an N x d orthonormal basis.
class Subspace {
public:
    /// Orthonormalizes the columns of `spanning` (N x d).
    static Subspace span_of(const Matrix& spanning) {
        require(spanning.cols() >= 1 && spanning.cols() <= spanning.rows(), ErrorCode::BadDims,
                "subspace needs 1 <= d <= N");
        return Subspace(orthonormalize(spanning));
    }

    /// Adopts `basis` as-is after checking basis^T basis = I within 1e-10.
    static Subspace from_orthonormal(Matrix basis) {
        require(basis.cols() >= 1 && basis.cols() <= basis.rows(), ErrorCode::BadDims, "subspace needs 1 <= d <= N");
        require(basis.all_finite(), ErrorCode::NonFinite, "basis entries");
        const Matrix gram = transpose_times(basis, basis);
        for (std::size_t i = 0; i < gram.rows(); ++i)
            for (std::size_t j = 0; j < gram.cols(); ++j)
                require(std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10, ErrorCode::InvalidArgument,
                        "basis columns are not orthonormal");
        return Subspace(std::move(basis));
    }

    /// span(e_{first}, ..., e_{first+d-1}) in R^N.
    static Subspace coordinate(std::size_t ambient, std::size_t first, std::size_t d) {
        require(d >= 1 && first + d <= ambient, ErrorCode::BadDims, "coordinate subspace out of range");
        Matrix b(ambient, d);
        for (std::size_t k = 0; k < d; ++k) b(first + k, k) = 1.0;
        return Subspace(std::move(b));
    }

    std::size_t ambient_dim() const noexcept { return basis_.rows(); }
    std::size_t dim() const noexcept { return basis_.cols(); }
    const Matrix& basis() const noexcept { return basis_; }

    /// Orthogonal projection of x onto the subspace, expressed in R^N.
    Vector project(std::span<const double> x) const { return basis_ * std::span<const double>(coeffs(x)); }

    /// Coordinates basis^T x.
    Vector coeffs(std::span<const double> x) const {
        require(x.size() == ambient_dim(), ErrorCode::DimMismatch, "vector length vs ambient dim");
        return transpose_times(basis_, x);
    }

private:
    explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}

    Matrix basis_;
};

/// Canonical angles, nondecreasing, each in [0, pi/2].
struct CanonicalAngles {
    Vector angles;
};

/// Paired principal vectors; column k of each achieves the k-th canonical angle.
struct PrincipalVectors {
    Matrix in_first;
    Matrix in_second;
};

enum class DistanceKind { ProjectionF, FubiniStudy, Grassmann, BinetCauchy, Procrustes, Asimov, Spectral, Projection };

inline constexpr std::array<DistanceKind, 8> kAllDistanceKinds = {
    DistanceKind::ProjectionF, DistanceKind::FubiniStudy, DistanceKind::Grassmann, DistanceKind::BinetCauchy,
    DistanceKind::Procrustes,  DistanceKind::Asimov,      DistanceKind::Spectral,  DistanceKind::Projection,
};

constexpr std::string_view to_string(DistanceKind kind) noexcept {
    switch (kind) {
        case DistanceKind::ProjectionF: return "projection-f";
        case DistanceKind::FubiniStudy: return "fubini-study";
        case DistanceKind::Grassmann: return "grassmann";
        case DistanceKind::BinetCauchy: return "binet-cauchy";
        case DistanceKind::Procrustes: return "procrustes";
        case DistanceKind::Asimov: return "asimov";
        case DistanceKind::Spectral: return "spectral";
        case DistanceKind::Projection: return "projection";
    }
    return "unknown";
}

inline std::optional<DistanceKind> parse_distance_kind(std::string_view name) {
    for (DistanceKind k : kAllDistanceKinds)
        if (to_string(k) == name) return k;
    return std::nullopt;
}

/// The three kinds that extend to subspaces of unequal dimension.
constexpr bool supports_unequal_dims(DistanceKind kind) noexcept {
    return kind == DistanceKind::ProjectionF || kind == DistanceKind::Grassmann || kind == DistanceKind::Procrustes;
}

namespace detail {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

inline double clamp_unit(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

// Deterministic argument order so that f(a, b) and f(b, a) run the identical computation.
inline bool first_goes_second(const Subspace& a, const Subspace& b) {
    if (a.dim() != b.dim()) return a.dim() > b.dim();
    const auto da = a.basis().data();
    const auto db = b.basis().data();
    return std::lexicographical_compare(db.begin(), db.end(), da.begin(), da.end());
}

}  // namespace detail

/**
 * Canonical angles between two subspaces of the same ambient space.
 *
 * Cosines are the singular values of A^T B. Near-zero angles lose accuracy
 * through arccos, so any angle whose cosine exceeds 1/sqrt(2) is recomputed
 * as arcsin of the matching singular value of (I - B B^T) A, taken with
 * A the lower-dimensional basis.
 */
inline CanonicalAngles canonical_angles(const Subspace& a, const Subspace& b) {
    require(a.ambient_dim() == b.ambient_dim(), ErrorCode::AmbientMismatch,
            std::to_string(a.ambient_dim()) + " vs " + std::to_string(b.ambient_dim()));
    if (a.basis() == b.basis()) return {Vector(a.dim(), 0.0)};
    if (detail::first_goes_second(a, b)) return canonical_angles(b, a);

    const Matrix& qa = a.basis();
    const Matrix& qb = b.basis();
    const Vector cosines = singular_values(transpose_times(qa, qb));  // nonincreasing, length d1
    const std::size_t k = cosines.size();

    Vector angles(k);
    bool need_sines = false;
    for (std::size_t i = 0; i < k; ++i) {
        if (cosines[i] > detail::kInvSqrt2)
            need_sines = true;
        else
            angles[i] = std::acos(detail::clamp_unit(cosines[i]));
    }
    if (need_sines) {
        Matrix residual = qa - qb * transpose_times(qb, qa);
        Vector sines = singular_values(residual);  // nonincreasing
        std::reverse(sines.begin(), sines.end());
        for (std::size_t i = 0; i < k; ++i)
            if (cosines[i] > detail::kInvSqrt2) angles[i] = std::asin(detail::clamp_unit(sines[i]));
    }
    std::sort(angles.begin(), angles.end());
    return {std::move(angles)};
}

/// Principal vectors from the thin SVD of A^T B. Only the angles are canonical: ties leave these non-unique.
inline PrincipalVectors principal_vectors(const Subspace& a, const Subspace& b) {
    require(a.ambient_dim() == b.ambient_dim(), ErrorCode::AmbientMismatch,
            std::to_string(a.ambient_dim()) + " vs " + std::to_string(b.ambient_dim()));
    const SvdResult svd = thin_svd(transpose_times(a.basis(), b.basis()));
    return {a.basis() * svd.left, b.basis() * svd.right};
}

/// Angle between span(x) and s.
inline double vector_subspace_angle(std::span<const double> x, const Subspace& s) {
    require(x.size() == s.ambient_dim(), ErrorCode::AmbientMismatch, "vector length vs ambient dim");
    const double nx = norm2(x);
    require(nx > 0.0, ErrorCode::ZeroVector, "angle to a zero vector is undefined");
    const Vector c = s.coeffs(x);
    const double cosine = norm2(c) / nx;
    if (cosine <= detail::kInvSqrt2) return std::acos(detail::clamp_unit(cosine));
    Vector r = s.basis() * std::span<const double>(c);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] - r[i];
    return std::asin(detail::clamp_unit(norm2(r) / nx));
}

/// sqrt(sum_k cos^2 theta_k)
inline double affinity_from_angles(std::span<const double> angles) {
    double s = 0.0;
    for (double t : angles) s += std::cos(t) * std::cos(t);
    return std::sqrt(s);
}

inline double affinity(const Subspace& a, const Subspace& b) {
    return affinity_from_angles(canonical_angles(a, b).angles);
}

/**
 * Distance of the given kind from the canonical angles of a d1-dim and a
 * d2-dim subspace (order irrelevant). Equal dimensions use the classical
 * formulas; unequal dimensions are supported only by the projection
 * F-norm, Grassmann and Procrustes extensions.
 */
inline double distance_from_angles(std::span<const double> angles, std::size_t d1, std::size_t d2, DistanceKind kind) {
    if (d1 > d2) std::swap(d1, d2);
    require(angles.size() == d1, ErrorCode::InvalidArgument, "angle count must equal min(d1, d2)");
    const double extra = static_cast<double>(d2 - d1);
    if (d1 != d2 && !supports_unequal_dims(kind))
        fail(ErrorCode::UnequalDimUnsupported, std::string(to_string(kind)) + " needs equal dimensions");

    double sum_sin2 = 0.0, sum_theta2 = 0.0, sum_half_sin2 = 0.0, log_cos2 = 0.0, prod_cos = 1.0;
    for (double t : angles) {
        const double s = std::sin(t);
        sum_sin2 += s * s;
        sum_theta2 += t * t;
        sum_half_sin2 += std::sin(0.5 * t) * std::sin(0.5 * t);
        log_cos2 += std::log1p(-s * s);
        prod_cos *= std::cos(t);
    }
    const double largest = angles.empty() ? 0.0 : angles.back();

    switch (kind) {
        case DistanceKind::ProjectionF:
            return std::sqrt(0.5 * extra + sum_sin2);
        case DistanceKind::Grassmann:
            return std::sqrt(extra * std::numbers::pi * std::numbers::pi / 4.0 + sum_theta2);
        case DistanceKind::Procrustes:
            return d1 == d2 ? 2.0 * std::sqrt(sum_half_sin2) : std::sqrt(extra + 2.0 * sum_half_sin2);
        case DistanceKind::BinetCauchy:
            // 1 - prod cos^2 via expm1/log1p keeps precision for small angles.
            return std::sqrt(std::max(0.0, -std::expm1(log_cos2)));
        case DistanceKind::FubiniStudy:
            return std::atan2(std::sqrt(std::max(0.0, -std::expm1(log_cos2))), std::max(0.0, prod_cos));
        case DistanceKind::Asimov:
            return largest;
        case DistanceKind::Spectral:
            return 2.0 * std::sin(0.5 * largest);
        case DistanceKind::Projection:
            return std::sin(largest);
    }
    fail(ErrorCode::InvalidArgument, "unknown distance kind");
}

inline double distance(const Subspace& a, const Subspace& b, DistanceKind kind) {
    require(a.ambient_dim() == b.ambient_dim(), ErrorCode::AmbientMismatch,
            std::to_string(a.ambient_dim()) + " vs " + std::to_string(b.ambient_dim()));
    if (a.dim() != b.dim() && !supports_unequal_dims(kind))
        fail(ErrorCode::UnequalDimUnsupported, std::string(to_string(kind)) + " needs equal dimensions");
    return distance_from_angles(canonical_angles(a, b).angles, a.dim(), b.dim(), kind);
}

}  // namespace csl
