#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/linalg.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/projection.hpp"
#include "csl/subspace.hpp"

namespace csl {

/// Symmetric, zero-diagonal pairwise dissimilarities with the weights that produced them.
struct DissimilarityMatrix {
    Matrix values;
    double u = 1.0;
    double v = 1.0;
};

struct EmbeddingCoords {
    Matrix coords;       // M x out_dim; column i = sqrt(lambda_i) v_i
    Vector eigenvalues;  // retained, nonincreasing
};

/// Points (rows) with labels indexing into `bases`.
struct LabeledPoints {
    Matrix points;
    std::vector<int> labels;
    std::vector<Subspace> bases;
};

namespace detail {

// sin of the angle between span(x) and span(y), for unit x and y.
inline double line_sine(std::span<const double> x, std::span<const double> y) {
    const double c = std::abs(dot(x, y));
    if (c <= kInvSqrt2) return std::sqrt(std::max(0.0, 1.0 - c * c));
    const double sign = dot(x, y) >= 0.0 ? 1.0 : -1.0;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = x[i] - sign * c * y[i];
        s += r * r;
    }
    return std::min(1.0, std::sqrt(s));
}

}  // namespace detail

/**
 * Angle-based dissimilarity between labeled points.
 *
 * Same label: sin^2 of the angle between the two points. Different labels:
 * (v sin theta_ij + u min_k (sin theta~_ik + sin theta~_jk))^2, where
 * theta~_ik is the angle from point i to subspace k and k ranges over every
 * subspace, the two home subspaces included.
 */
inline DissimilarityMatrix dissimilarity(const LabeledPoints& data, double u = 1.0, double v = 1.0) {
    require(u >= 0.0 && v >= 0.0 && std::isfinite(u) && std::isfinite(v), ErrorCode::InvalidArgument,
            "u and v must be finite and >= 0");
    const std::size_t m = data.points.rows();
    const std::size_t n = data.points.cols();
    require(data.labels.size() == m, ErrorCode::LengthMismatch, "one label per point required");
    for (int l : data.labels)
        require(l >= 0 && static_cast<std::size_t>(l) < data.bases.size(), ErrorCode::MissingBasis,
                "no basis for label " + std::to_string(l));
    for (const auto& b : data.bases)
        require(b.ambient_dim() == n, ErrorCode::AmbientMismatch, "basis ambient dim vs point dim");

    Matrix unit(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double nx = norm2(data.points.row(i));
        require(nx > 0.0, ErrorCode::ZeroVector, "point " + std::to_string(i) + " is zero");
        for (std::size_t j = 0; j < n; ++j) unit(i, j) = data.points(i, j) / nx;
    }
    Matrix to_subspace(m, data.bases.size());  // sin theta~_ik
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < data.bases.size(); ++k)
            to_subspace(i, k) = std::sin(vector_subspace_angle(unit.row(i), data.bases[k]));

    DissimilarityMatrix out{Matrix(m, m), u, v};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double s = detail::line_sine(unit.row(i), unit.row(j));
            double value;
            if (data.labels[i] == data.labels[j]) {
                value = s * s;
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < data.bases.size(); ++k)
                    best = std::min(best, to_subspace(i, k) + to_subspace(j, k));
                const double t = v * s + u * best;
                value = t * t;
            }
            out.values(i, j) = value;
            out.values(j, i) = value;
        }
    }
    return out;
}

/**
 * Classical MDS: B = -1/2 H D H, coordinates sqrt(lambda_i) v_i for the top
 * out_dim eigenpairs. The leading eigenvalues must be distinct (relative gap
 * 1e-9) and lambda_out_dim positive, otherwise the embedding is not unique.
 * Each v_i is signed so its largest-magnitude entry is positive.
 */
inline EmbeddingCoords classical_mds(const Matrix& d, std::size_t out_dim) {
    require(d.rows() == d.cols(), ErrorCode::BadDims, "dissimilarity matrix must be square");
    require(out_dim >= 1 && out_dim <= 3, ErrorCode::InvalidArgument, "out_dim must be 1, 2 or 3");
    const std::size_t m = d.rows();
    require(m > out_dim, ErrorCode::BadDims, "need more points than output dimensions");

    Vector row_mean(m, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) row_mean[i] += d(i, j);
        grand += row_mean[i];
        row_mean[i] /= static_cast<double>(m);
    }
    grand /= static_cast<double>(m * m);
    Matrix b(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            b(i, j) = -0.5 * (d(i, j) - row_mean[i] - row_mean[j] + grand);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) b(i, j) = b(j, i) = 0.5 * (b(i, j) + b(j, i));

    const EigResult eig = sym_eig(b);
    const Vector& lam = eig.eigenvalues;
    double scale = 0.0;
    for (double x : lam) scale = std::max(scale, std::abs(x));
    const double gap_tol = 1e-9 * scale;

    for (std::size_t i = 0; i + 1 < out_dim; ++i)
        if (!(lam[i] - lam[i + 1] > gap_tol))
            fail(ErrorCode::DegenerateSpectrum, "eigenvalues " + std::to_string(i + 1) + " and " + std::to_string(i + 2) +
                                                    " coincide; the embedding is not unique");
    if (!(lam[out_dim - 1] > gap_tol))
        fail(ErrorCode::NonPositiveEigenvalue,
             "eigenvalue " + std::to_string(out_dim) + " is not positive (" + std::to_string(lam[out_dim - 1]) + ")");
    if (!(lam[out_dim - 1] - lam[out_dim] > gap_tol))
        fail(ErrorCode::DegenerateSpectrum, "eigenvalues " + std::to_string(out_dim) + " and " +
                                                std::to_string(out_dim + 1) + " coincide; the embedding is not unique");

    EmbeddingCoords out{Matrix(m, out_dim), Vector(lam.begin(), lam.begin() + static_cast<std::ptrdiff_t>(out_dim))};
    for (std::size_t k = 0; k < out_dim; ++k) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < m; ++i)
            if (std::abs(eig.eigenvectors(i, k)) > std::abs(eig.eigenvectors(arg, k))) arg = i;
        const double sign = eig.eigenvectors(arg, k) < 0.0 ? -1.0 : 1.0;
        const double root = std::sqrt(lam[k]);
        for (std::size_t i = 0; i < m; ++i) out.coords(i, k) = sign * root * eig.eigenvectors(i, k);
    }
    return out;
}

/// Points and bases pushed through the projector.
inline LabeledPoints compress(const LabeledPoints& data, const JlProjector& projector) {
    LabeledPoints out;
    out.points = projector.apply_to_rows(data.points);
    out.labels = data.labels;
    for (const auto& b : data.bases) out.bases.push_back(project_subspace(projector, b).image);
    return out;
}

/// dissimilarity -> classical MDS, optionally on compressed data.
inline EmbeddingCoords visualize(const LabeledPoints& data, double u, double v, std::size_t out_dim,
                                 const JlProjector* projector = nullptr) {
    if (projector) return classical_mds(dissimilarity(compress(data, *projector), u, v).values, out_dim);
    return classical_mds(dissimilarity(data, u, v).values, out_dim);
}

}  // namespace csl
