#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/linalg.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/numerics/rng.hpp"
#include "csl/numerics/transforms.hpp"
#include "csl/subspace.hpp"

namespace csl {

/// Restriction is the deterministic coordinate map [I_n | 0]; only csl::testing builds it.
enum class ProjectorFamily { Gaussian, Rademacher, SubsampledHadamard, SubsampledFourier, Restriction };

constexpr std::string_view to_string(ProjectorFamily f) noexcept {
    switch (f) {
        case ProjectorFamily::Gaussian: return "gaussian";
        case ProjectorFamily::Rademacher: return "rademacher";
        case ProjectorFamily::SubsampledHadamard: return "hadamard";
        case ProjectorFamily::SubsampledFourier: return "fourier";
        case ProjectorFamily::Restriction: return "restriction";
    }
    return "unknown";
}

inline std::optional<ProjectorFamily> parse_projector_family(std::string_view name) {
    for (auto f : {ProjectorFamily::Gaussian, ProjectorFamily::Rademacher, ProjectorFamily::SubsampledHadamard,
                   ProjectorFamily::SubsampledFourier})
        if (to_string(f) == name) return f;
    return std::nullopt;
}

class JlProjector;
JlProjector make_projector(ProjectorFamily family, std::size_t ambient, std::size_t target, std::uint64_t seed);

namespace testing {
JlProjector make_restriction_projector(std::size_t ambient, std::size_t target);
}

/**
 * Seeded linear map R^N -> R^n with E||Phi x||^2 = ||x||^2.
 *
 * Dense families store the n x N matrix. The fast families keep a sign
 * vector over the padded length N_pad (least power of two >= N), a set of
 * sampled rows or frequencies, and apply an orthonormal transform in
 * O(N_pad log N_pad):
 *   hadamard: sqrt(N_pad/n) * S * H * D * pad(x)
 *   fourier:  sqrt(N_pad/n) * [sqrt2 Re F_f ; sqrt2 Im F_f] * D * pad(x), n/2 frequencies f
 *             drawn from 1..N_pad/2-1 (DC and Nyquist are real and left out).
 * Immutable after construction; apply() is safe to call concurrently.
 */
class JlProjector {
public:
    ProjectorFamily family() const noexcept { return family_; }
    std::size_t ambient_dim() const noexcept { return ambient_; }
    std::size_t target_dim() const noexcept { return target_; }
    std::size_t padded_dim() const noexcept { return padded_; }
    std::uint64_t seed() const noexcept { return seed_; }
    bool is_fast() const noexcept {
        return family_ == ProjectorFamily::SubsampledHadamard || family_ == ProjectorFamily::SubsampledFourier;
    }

    const std::vector<double>& signs() const noexcept { return signs_; }
    /// Hadamard: sampled row indices. Fourier: sampled frequencies.
    const std::vector<std::size_t>& sampled() const noexcept { return sampled_; }
    const Matrix& dense_matrix() const noexcept { return dense_; }

    Vector apply(std::span<const double> x) const {
        require(x.size() == ambient_, ErrorCode::DimMismatch,
                "vector length " + std::to_string(x.size()) + " vs projector ambient " + std::to_string(ambient_));
        switch (family_) {
            case ProjectorFamily::Gaussian:
            case ProjectorFamily::Rademacher:
                return dense_ * x;
            case ProjectorFamily::Restriction:
                return Vector(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(target_));
            case ProjectorFamily::SubsampledHadamard:
                return apply_hadamard(x);
            case ProjectorFamily::SubsampledFourier:
                return apply_fourier(x);
        }
        fail(ErrorCode::InvalidArgument, "unknown projector family");
    }

    /// Phi * m for an N x k matrix.
    Matrix apply_to_columns(const Matrix& m) const {
        require(m.rows() == ambient_, ErrorCode::DimMismatch, "matrix rows vs projector ambient");
        if (family_ == ProjectorFamily::Gaussian || family_ == ProjectorFamily::Rademacher) return dense_ * m;
        Matrix out(target_, m.cols());
        for (std::size_t j = 0; j < m.cols(); ++j) out.set_col(j, apply(m.col(j)));
        return out;
    }

    /// Each row of `points` (M x N) mapped to a row of the M x n result.
    Matrix apply_to_rows(const Matrix& points) const {
        require(points.cols() == ambient_, ErrorCode::DimMismatch, "point dimension vs projector ambient");
        Matrix out(points.rows(), target_);
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const Vector y = apply(points.row(i));
            std::copy(y.begin(), y.end(), out.row(i).begin());
        }
        return out;
    }

    /**
     * The explicit n x N matrix of this map, built entry by entry from the
     * stored signs and samples (not by pushing unit vectors through apply).
     */
    Matrix materialize() const {
        require(padded_ <= 4096, ErrorCode::TooLarge, "materialize limited to N_pad <= 4096");
        if (family_ == ProjectorFamily::Gaussian || family_ == ProjectorFamily::Rademacher ||
            family_ == ProjectorFamily::Restriction)
            return dense_;
        Matrix m(target_, ambient_);
        const double np = static_cast<double>(padded_);
        const double scale = std::sqrt(np / static_cast<double>(target_)) / std::sqrt(np);
        if (family_ == ProjectorFamily::SubsampledHadamard) {
            for (std::size_t r = 0; r < target_; ++r)
                for (std::size_t j = 0; j < ambient_; ++j) {
                    const bool odd = std::popcount(sampled_[r] & j) & 1;
                    m(r, j) = scale * (odd ? -1.0 : 1.0) * signs_[j];
                }
            return m;
        }
        const std::size_t half = target_ / 2;
        for (std::size_t r = 0; r < half; ++r) {
            const auto f = sampled_[r];
            for (std::size_t j = 0; j < ambient_; ++j) {
                const double phase = 2.0 * std::numbers::pi * static_cast<double>((f * j) % padded_) / np;
                m(r, j) = std::numbers::sqrt2 * scale * std::cos(phase) * signs_[j];
                m(half + r, j) = -std::numbers::sqrt2 * scale * std::sin(phase) * signs_[j];
            }
        }
        return m;
    }

private:
    friend JlProjector make_projector(ProjectorFamily, std::size_t, std::size_t, std::uint64_t);
    friend JlProjector testing::make_restriction_projector(std::size_t, std::size_t);

    JlProjector() = default;

    Vector padded_signed(std::span<const double> x) const {
        Vector buf(padded_, 0.0);
        for (std::size_t i = 0; i < ambient_; ++i) buf[i] = signs_[i] * x[i];
        return buf;
    }

    Vector apply_hadamard(std::span<const double> x) const {
        Vector buf = padded_signed(x);
        fwht_inplace(buf);
        const double scale = std::sqrt(static_cast<double>(padded_) / static_cast<double>(target_));
        Vector y(target_);
        for (std::size_t r = 0; r < target_; ++r) y[r] = scale * buf[sampled_[r]];
        return y;
    }

    Vector apply_fourier(std::span<const double> x) const {
        std::vector<Complex> buf(padded_);
        for (std::size_t i = 0; i < ambient_; ++i) buf[i] = signs_[i] * x[i];
        fft_->forward(buf);
        const double scale = std::numbers::sqrt2 * std::sqrt(static_cast<double>(padded_) / static_cast<double>(target_));
        const std::size_t half = target_ / 2;
        Vector y(target_);
        for (std::size_t r = 0; r < half; ++r) {
            y[r] = scale * buf[sampled_[r]].real();
            y[half + r] = scale * buf[sampled_[r]].imag();
        }
        return y;
    }

    ProjectorFamily family_ = ProjectorFamily::Gaussian;
    std::size_t ambient_ = 0;
    std::size_t target_ = 0;
    std::size_t padded_ = 0;
    std::uint64_t seed_ = 0;
    Matrix dense_;
    std::vector<double> signs_;
    std::vector<std::size_t> sampled_;
    std::shared_ptr<const FftPlan> fft_;
};

inline JlProjector make_projector(ProjectorFamily family, std::size_t ambient, std::size_t target, std::uint64_t seed) {
    require(target >= 1 && target < ambient, ErrorCode::BadDims,
            "projector needs 1 <= n < N (got n=" + std::to_string(target) + ", N=" + std::to_string(ambient) + ")");
    require(family != ProjectorFamily::Restriction, ErrorCode::InvalidArgument,
            "restriction projector is test-only; use csl::testing::make_restriction_projector");
    if (family == ProjectorFamily::SubsampledFourier)
        require(target % 2 == 0, ErrorCode::OddTargetDim, "fourier projector needs an even target dimension");

    JlProjector p;
    p.family_ = family;
    p.ambient_ = ambient;
    p.target_ = target;
    p.seed_ = seed;
    p.padded_ = ambient;
    Rng rng(seed);
    switch (family) {
        case ProjectorFamily::Gaussian: {
            p.dense_ = Matrix(target, ambient, rng.gaussian_vector(target * ambient));
            p.dense_ *= 1.0 / std::sqrt(static_cast<double>(target));
            break;
        }
        case ProjectorFamily::Rademacher: {
            p.dense_ = Matrix(target, ambient, rng.rademacher_vector(target * ambient));
            p.dense_ *= 1.0 / std::sqrt(static_cast<double>(target));
            break;
        }
        case ProjectorFamily::SubsampledHadamard: {
            p.padded_ = next_power_of_two(ambient);
            p.signs_ = rng.rademacher_vector(p.padded_);
            p.sampled_ = rng.sample_without_replacement(p.padded_, target);
            break;
        }
        case ProjectorFamily::SubsampledFourier: {
            p.padded_ = next_power_of_two(ambient);
            p.signs_ = rng.rademacher_vector(p.padded_);
            p.sampled_ = rng.sample_without_replacement(p.padded_ / 2 - 1, target / 2);
            for (auto& f : p.sampled_) f += 1;
            p.fft_ = std::make_shared<const FftPlan>(p.padded_);
            break;
        }
        case ProjectorFamily::Restriction:
            break;
    }
    return p;
}

namespace testing {

/// [I_n | 0]: an exact isometry on vectors supported in the first n coordinates.
inline JlProjector make_restriction_projector(std::size_t ambient, std::size_t target) {
    require(target >= 1 && target < ambient, ErrorCode::BadDims, "restriction needs 1 <= n < N");
    JlProjector p;
    p.family_ = ProjectorFamily::Restriction;
    p.ambient_ = ambient;
    p.target_ = target;
    p.padded_ = ambient;
    p.dense_ = Matrix(target, ambient);
    for (std::size_t i = 0; i < target; ++i) p.dense_(i, i) = 1.0;
    return p;
}

}  // namespace testing

inline Vector project_vector(const JlProjector& p, std::span<const double> x) { return p.apply(x); }

/// The image of a subspace under a projector, with its source dimensions.
struct ProjectedSubspace {
    std::size_t source_ambient;
    std::size_t source_dim;
    Subspace image;
};

/// Image basis = orthonormalize(Phi * basis); a rank drop is reported, never absorbed.
inline ProjectedSubspace project_subspace(const JlProjector& p, const Subspace& s) {
    require(s.ambient_dim() == p.ambient_dim(), ErrorCode::DimMismatch, "subspace ambient vs projector ambient");
    if (p.target_dim() < s.dim())
        fail(ErrorCode::DimensionCollapsed, "target dimension " + std::to_string(p.target_dim()) +
                                                " is below subspace dimension " + std::to_string(s.dim()));
    const Matrix image = p.apply_to_columns(s.basis());
    try {
        return {s.ambient_dim(), s.dim(), Subspace::span_of(image)};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::RankDeficient)
            fail(ErrorCode::DimensionCollapsed, "projected basis lost rank: " + std::string(e.what()));
        throw;
    }
}

inline Matrix materialize(const JlProjector& p) { return p.materialize(); }

}  // namespace csl
