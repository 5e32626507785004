#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/linalg.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/numerics/rng.hpp"
#include "csl/subspace.hpp"

namespace csl {

struct AnglePrescription {
    std::size_t ambient_dim = 0;
    Vector angles;  // sorted, each in [0, pi/2]
};

struct UosSpec {
    std::size_t ambient_dim = 0;
    std::vector<std::size_t> dims;      // one entry per subspace
    std::size_t points_per_subspace = 0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Optional N x N positive-definite R_n; noise is N(0, R_n / d_l). Overrides noise_sigma.
    std::optional<Matrix> noise_covariance;
};

struct UosDataset {
    Matrix data;                  // M x N, one point per row
    std::vector<int> labels;      // in [0, L)
    std::vector<Subspace> bases;  // generating subspaces
};

inline void validate(const AnglePrescription& p) {
    const std::size_t d = p.angles.size();
    require(d >= 1, ErrorCode::InvalidArgument, "at least one angle required");
    require(p.ambient_dim >= 2 * d, ErrorCode::AmbientTooSmall,
            "prescribing " + std::to_string(d) + " angles needs N >= " + std::to_string(2 * d));
    for (std::size_t k = 0; k < d; ++k) {
        require(std::isfinite(p.angles[k]) && p.angles[k] >= 0.0 && p.angles[k] <= std::numbers::pi / 2,
                ErrorCode::InvalidArgument, "angles must lie in [0, pi/2]");
        require(k == 0 || p.angles[k - 1] <= p.angles[k], ErrorCode::InvalidArgument, "angles must be sorted");
    }
}

/**
 * Two d-dim subspaces with the prescribed canonical angles:
 * A = T span(e_1..e_d), B = T span(cos t_k e_k + sin t_k e_{d+k}),
 * with T the first 2d columns of a Haar-random orthogonal matrix.
 */
inline std::pair<Subspace, Subspace> subspace_pair_with_angles(const AnglePrescription& p, std::uint64_t seed) {
    validate(p);
    const std::size_t n = p.ambient_dim;
    const std::size_t d = p.angles.size();
    Rng rng(seed);
    const Matrix frame = random_orthonormal(n, 2 * d, rng);
    Matrix a(n, d), b(n, d);
    for (std::size_t k = 0; k < d; ++k) {
        const double c = std::cos(p.angles[k]);
        const double s = std::sin(p.angles[k]);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, k) = frame(i, k);
            b(i, k) = c * frame(i, k) + s * frame(i, d + k);
        }
    }
    return {Subspace::from_orthonormal(std::move(a)), Subspace::from_orthonormal(std::move(b))};
}

inline Subspace random_subspace(std::size_t ambient, std::size_t dim, std::uint64_t seed) {
    require(dim >= 1 && dim <= ambient, ErrorCode::BadDims, "random_subspace needs 1 <= d <= N");
    Rng rng(seed);
    return Subspace::from_orthonormal(random_orthonormal(ambient, dim, rng));
}

/// Mutually orthogonal subspaces: consecutive column blocks of one Haar-random frame.
inline std::vector<Subspace> orthogonal_subspaces(std::size_t ambient, std::span<const std::size_t> dims,
                                                  std::uint64_t seed) {
    std::size_t total = 0;
    for (std::size_t d : dims) {
        require(d >= 1, ErrorCode::BadDims, "subspace dims must be >= 1");
        total += d;
    }
    require(!dims.empty() && total <= ambient, ErrorCode::BadDims,
            "orthogonal subspaces need sum of dims <= N (" + std::to_string(total) + " > " + std::to_string(ambient) + ")");
    Rng rng(seed);
    const Matrix frame = random_orthonormal(ambient, total, rng);
    std::vector<Subspace> out;
    std::size_t first = 0;
    for (std::size_t d : dims) {
        out.push_back(Subspace::from_orthonormal(frame.col_block(first, d)));
        first += d;
    }
    return out;
}

inline void validate(const UosSpec& spec) {
    require(spec.ambient_dim >= 1, ErrorCode::BadDims, "ambient_dim must be positive");
    require(!spec.dims.empty(), ErrorCode::InvalidArgument, "at least one subspace required");
    for (std::size_t d : spec.dims)
        require(d >= 1 && d <= spec.ambient_dim, ErrorCode::BadDims, "each subspace dim must be in [1, N]");
    require(spec.points_per_subspace >= 1, ErrorCode::InvalidArgument, "points_per_subspace must be >= 1");
    require(std::isfinite(spec.noise_sigma) && spec.noise_sigma >= 0.0, ErrorCode::InvalidArgument,
            "noise_sigma must be >= 0");
    if (spec.noise_covariance)
        require(spec.noise_covariance->rows() == spec.ambient_dim && spec.noise_covariance->cols() == spec.ambient_dim,
                ErrorCode::BadDims, "noise covariance must be N x N");
}

/// Subspace l is random_subspace(N, d_l, derive_seed(seed, 1, l)); point = U_l s + w.
inline UosDataset generate_uos(const UosSpec& spec, std::vector<Subspace> bases = {}) {
    validate(spec);
    const std::size_t n = spec.ambient_dim;
    const std::size_t count = spec.dims.size();
    if (bases.empty()) {
        for (std::size_t l = 0; l < count; ++l)
            bases.push_back(random_subspace(n, spec.dims[l], derive_seed(spec.seed, 1, l)));
    } else {
        require(bases.size() == count, ErrorCode::InvalidArgument, "supplied bases must match dims");
        for (std::size_t l = 0; l < count; ++l)
            require(bases[l].ambient_dim() == n && bases[l].dim() == spec.dims[l], ErrorCode::BadDims,
                    "supplied basis shape");
    }
    std::optional<Matrix> noise_factor;
    if (spec.noise_covariance) noise_factor = cholesky(*spec.noise_covariance);

    UosDataset out;
    out.data = Matrix(count * spec.points_per_subspace, n);
    out.labels.reserve(count * spec.points_per_subspace);
    Rng rng(derive_seed(spec.seed, 2));
    std::size_t row = 0;
    for (std::size_t l = 0; l < count; ++l) {
        const double d = static_cast<double>(spec.dims[l]);
        const double coef_sd = 1.0 / std::sqrt(d);
        const double noise_sd = spec.noise_sigma / std::sqrt(d);
        for (std::size_t p = 0; p < spec.points_per_subspace; ++p, ++row) {
            Vector s = rng.gaussian_vector(spec.dims[l]);
            for (double& x : s) x *= coef_sd;
            Vector x = bases[l].basis() * std::span<const double>(s);
            if (noise_factor) {
                Vector z = rng.gaussian_vector(n);
                const Vector w = *noise_factor * std::span<const double>(z);
                for (std::size_t i = 0; i < n; ++i) x[i] += w[i] / std::sqrt(d);
            } else if (noise_sd > 0.0) {
                for (std::size_t i = 0; i < n; ++i) x[i] += noise_sd * rng.gaussian();
            }
            std::copy(x.begin(), x.end(), out.data.row(row).begin());
            out.labels.push_back(static_cast<int>(l));
        }
    }
    out.bases = std::move(bases);
    return out;
}

}  // namespace csl
