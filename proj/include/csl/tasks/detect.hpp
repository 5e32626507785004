#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/matrix.hpp"
#include "csl/numerics/rng.hpp"
#include "csl/projection.hpp"
#include "csl/subspace.hpp"

namespace csl {

/// Candidate subspaces for active subspace detection.
class SubspaceBank {
public:
    explicit SubspaceBank(std::vector<Subspace> subspaces) : subspaces_(std::move(subspaces)) {
        require(!subspaces_.empty(), ErrorCode::EmptyBank, "subspace bank is empty");
        for (const auto& s : subspaces_)
            require(s.ambient_dim() == subspaces_.front().ambient_dim(), ErrorCode::AmbientMismatch,
                    "bank subspaces must share an ambient dimension");
    }

    std::size_t size() const noexcept { return subspaces_.size(); }
    std::size_t ambient_dim() const noexcept { return subspaces_.front().ambient_dim(); }
    const Subspace& operator[](std::size_t i) const { return subspaces_[i]; }
    const std::vector<Subspace>& subspaces() const noexcept { return subspaces_; }

private:
    std::vector<Subspace> subspaces_;
};

/// argmax_i ||U_i^T x||; ties go to the smallest index.
inline std::size_t detect(const SubspaceBank& bank, std::span<const double> x) {
    require(x.size() == bank.ambient_dim(), ErrorCode::DimMismatch, "observation length vs bank ambient dim");
    require(norm2(x) > 0.0, ErrorCode::ZeroVector, "cannot detect a zero observation");
    std::size_t best = 0;
    double best_energy = -1.0;
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const Vector c = bank[i].coeffs(x);
        const double energy = dot(c, c);
        if (energy > best_energy) {
            best_energy = energy;
            best = i;
        }
    }
    return best;
}

/// Detection in R^n against the orthonormalized images V_i of Phi U_i, computed once.
class CompressedDetector {
public:
    CompressedDetector(const SubspaceBank& bank, JlProjector projector)
        : projector_(std::move(projector)), bank_(project_bank(bank, projector_)) {}

    std::size_t detect(std::span<const double> x) const {
        require(x.size() == projector_.ambient_dim(), ErrorCode::DimMismatch, "observation length vs projector");
        const Vector y = projector_.apply(x);
        return csl::detect(bank_, y);
    }

    const SubspaceBank& compressed_bank() const noexcept { return bank_; }
    const JlProjector& projector() const noexcept { return projector_; }

private:
    static SubspaceBank project_bank(const SubspaceBank& bank, const JlProjector& p) {
        require(p.ambient_dim() == bank.ambient_dim(), ErrorCode::DimMismatch, "projector ambient vs bank");
        std::vector<Subspace> images;
        for (const auto& s : bank.subspaces()) images.push_back(project_subspace(p, s).image);
        return SubspaceBank(std::move(images));
    }

    JlProjector projector_;
    SubspaceBank bank_;
};

inline std::size_t detect_compressed(const SubspaceBank& bank, std::span<const double> x, const JlProjector& projector) {
    return CompressedDetector(bank, projector).detect(x);
}

struct DetectionBound {
    double affinity = 0.0;
    double delta = 0.0;
    std::size_t dim = 0;
    std::size_t terms = 0;   // number of competing hypotheses j != i
    double base = 0.0;       // (1 - aff^2/d - delta)/(1 + delta) - 8/d
    double exponent = 0.0;   // C(aff, delta)
    double probability = 0.0;  // lower bound on the correct-detection probability, clamped to [0, 1]
    bool vacuous = false;
};

/**
 * Lower bound on the probability that the ML detector picks the true
 * subspace when s ~ N(0, I/d) and the noise covariance R_n/d has
 * lambda_max(R_n) = delta:
 *   C = (1/8) base^2 / (4 + base),  base = (1 - aff^2/d - delta)/(1 + delta) - 8/d
 *   P >= 1 - 4 * terms * exp(-C d)
 * A non-positive base or a non-positive raw bound is flagged vacuous.
 */
inline DetectionBound detection_bound(double aff, double delta, std::size_t d, std::size_t terms) {
    require(d >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
    require(std::isfinite(aff) && aff >= 0.0 && aff * aff <= static_cast<double>(d) * (1.0 + 1e-12),
            ErrorCode::BadAffinity, "affinity must satisfy 0 <= aff^2 <= d");
    require(std::isfinite(delta) && delta >= 0.0, ErrorCode::InvalidArgument, "delta must be >= 0");
    DetectionBound out;
    out.affinity = aff;
    out.delta = delta;
    out.dim = d;
    out.terms = terms;
    const double dd = static_cast<double>(d);
    out.base = (1.0 - aff * aff / dd - delta) / (1.0 + delta) - 8.0 / dd;
    out.exponent = 0.125 * out.base * out.base / (4.0 + out.base);
    const double raw = 1.0 - 4.0 * static_cast<double>(terms) * std::exp(-out.exponent * dd);
    out.probability = std::clamp(raw, 0.0, 1.0);
    out.vacuous = out.base <= 0.0 || raw <= 0.0 || !std::isfinite(out.exponent);
    if (!std::isfinite(out.exponent)) out.probability = 0.0;
    return out;
}

struct DetectionTrialConfig {
    std::size_t trials = 1000;
    double delta = 0.0;  // noise covariance (delta / d) I
    std::uint64_t seed = 0;
};

/**
 * Monte-Carlo error rate of the (optionally compressed) ML detector under
 * x = U_i s + n, s ~ N(0, I/d_i), n ~ N(0, delta/d_i I). The true index
 * cycles through the bank so every hypothesis is equally likely.
 */
inline double detection_error_rate(const SubspaceBank& bank, const DetectionTrialConfig& cfg,
                                   const CompressedDetector* compressed = nullptr) {
    require(cfg.trials >= 1, ErrorCode::InvalidArgument, "trials must be >= 1");
    Rng rng(cfg.seed);
    const std::size_t n = bank.ambient_dim();
    std::size_t errors = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::size_t truth = t % bank.size();
        const Subspace& s = bank[truth];
        const double d = static_cast<double>(s.dim());
        Vector coef = rng.gaussian_vector(s.dim());
        for (double& c : coef) c /= std::sqrt(d);
        Vector x = s.basis() * std::span<const double>(coef);
        if (cfg.delta > 0.0) {
            const double sd = std::sqrt(cfg.delta / d);
            for (std::size_t i = 0; i < n; ++i) x[i] += sd * rng.gaussian();
        }
        const std::size_t guess = compressed ? compressed->detect(x) : detect(bank, x);
        if (guess != truth) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(cfg.trials);
}

}  // namespace csl
