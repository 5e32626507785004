#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "csl/error.hpp"
#include "csl/numerics/parallel.hpp"
#include "csl/numerics/rng.hpp"
#include "csl/projection.hpp"
#include "csl/subspace.hpp"
#include "csl/synth.hpp"

namespace csl {

/**
 * Canonical-angle distortion experiment: L fixed subspaces of R^N are
 * pushed through fresh random projectors at each target dimension n, and
 * the angles, sines, cosines, affinity and every applicable distance of
 * each pair are compared before and after.
 */
struct CapExperimentConfig {
    std::size_t ambient_dim = 0;
    std::vector<std::size_t> dims;          // one per subspace (L = dims.size())
    std::optional<Vector> prescribed_angles;  // if set: a single pair with these angles
    ProjectorFamily family = ProjectorFamily::Gaussian;
    std::vector<std::size_t> target_dims;
    std::size_t trials = 1;
    std::uint64_t base_seed = 0;
    std::vector<double> failure_levels = {0.05, 0.1, 0.2, 0.3};
    double target_epsilon = 0.1;
    std::size_t threads = 1;

    std::size_t subspace_count() const { return prescribed_angles ? 2 : dims.size(); }
};

/// One canonical angle of one pair in one trial.
struct AngleRecord {
    std::size_t n;
    std::size_t trial;
    std::size_t pair;
    std::size_t k;
    double theta;  // before projection
    double psi;    // after

    double absolute() const { return std::abs(psi - theta); }
    /// (psi - theta) / theta; undefined at theta = 0.
    std::optional<double> signed_relative() const {
        if (!(theta > 0.0)) return std::nullopt;
        return (psi - theta) / theta;
    }
    std::optional<double> relative() const {
        auto s = signed_relative();
        if (!s) return std::nullopt;
        return std::abs(*s);
    }
    std::optional<double> sine_relative() const {
        const double s = std::sin(theta);
        if (!(s > 0.0)) return std::nullopt;
        return std::abs(std::sin(psi) - s) / s;
    }
    std::optional<double> cosine_relative() const {
        const double c = std::cos(theta);
        if (!(c > 1e-12)) return std::nullopt;
        return std::abs(std::cos(psi) - c) / c;
    }
};

/// Before/after value of a scalar pair metric (a distance kind, or affinity).
struct MetricRecord {
    std::size_t n;
    std::size_t trial;
    std::size_t pair;
    double original;
    double projected;

    std::optional<double> relative() const {
        if (!(original > 0.0)) return std::nullopt;
        return std::abs(projected - original) / original;
    }
};

struct LevelSummary {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::size_t collapsed_trials = 0;
    std::size_t relative_samples = 0;
    double angle_rel_median = 0.0;
    double angle_rel_p95 = 0.0;
    double angle_abs_median = 0.0;
    double angle_signed_min = 0.0;
    double angle_signed_max = 0.0;
    std::optional<double> sine_rel_median;
    std::optional<double> cosine_rel_median;
    std::optional<double> affinity_rel_median;
    std::vector<std::optional<double>> distance_rel_median;  // indexed like kAllDistanceKinds
    std::vector<double> failure_fraction;                     // indexed like config.failure_levels
    std::size_t failure_units = 0;                            // (trial, pair) units with a nonzero angle
};

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of log-space residuals
};

struct DistortionReport {
    CapExperimentConfig config;
    std::vector<Vector> original_angles;  // per pair
    std::vector<LevelSummary> levels;     // in config.target_dims order
    std::optional<DecayFit> decay;        // absent when fewer than 3 usable levels
    std::vector<AngleRecord> angle_records;
    std::vector<std::vector<MetricRecord>> distance_records;  // indexed like kAllDistanceKinds
    std::vector<MetricRecord> affinity_records;
    std::vector<std::string> warnings;
};

/// Linear-interpolated quantile (q in [0, 1]) of unsorted samples.
inline double quantile(std::vector<double> v, double q) {
    require(!v.empty(), ErrorCode::DegenerateInput, "quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

/// Ordinary least squares of log(median) on log(n).
inline DecayFit fit_decay_slope(std::span<const double> ns, std::span<const double> medians) {
    require(ns.size() == medians.size(), ErrorCode::DegenerateInput, "ns and medians differ in length");
    std::vector<double> xs(ns.begin(), ns.end());
    std::sort(xs.begin(), xs.end());
    const auto distinct = static_cast<std::size_t>(std::unique(xs.begin(), xs.end()) - xs.begin());
    require(distinct >= 3, ErrorCode::DegenerateInput, "need at least 3 distinct n values");
    const std::size_t m = ns.size();
    double sx = 0, sy = 0;
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        require(ns[i] > 0.0 && medians[i] > 0.0 && std::isfinite(medians[i]), ErrorCode::DegenerateInput,
                "n and medians must be positive");
        lx[i] = std::log(ns[i]);
        ly[i] = std::log(medians[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    DecayFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / static_cast<double>(m));
    return fit;
}

inline void validate(const CapExperimentConfig& cfg) {
    require(cfg.ambient_dim >= 2, ErrorCode::ConfigError, "ambient_dim must be >= 2");
    require(cfg.trials >= 1, ErrorCode::ConfigError, "trials must be >= 1");
    require(!cfg.target_dims.empty(), ErrorCode::ConfigError, "target_dims must be non-empty");
    std::size_t max_dim = 0;
    if (cfg.prescribed_angles) {
        validate(AnglePrescription{cfg.ambient_dim, *cfg.prescribed_angles});
        max_dim = cfg.prescribed_angles->size();
    } else {
        require(cfg.dims.size() >= 2, ErrorCode::ConfigError, "need at least two subspaces");
        for (std::size_t d : cfg.dims) {
            require(d >= 1 && d <= cfg.ambient_dim, ErrorCode::ConfigError, "subspace dims must be in [1, N]");
            max_dim = std::max(max_dim, d);
        }
    }
    for (std::size_t n : cfg.target_dims) {
        require(n >= max_dim && n < cfg.ambient_dim, ErrorCode::ConfigError,
                "every target dim must satisfy d <= n < N (got " + std::to_string(n) + ")");
        if (cfg.family == ProjectorFamily::SubsampledFourier)
            require(n % 2 == 0, ErrorCode::ConfigError, "fourier target dims must be even");
    }
    for (double e : cfg.failure_levels)
        require(e > 0.0 && std::isfinite(e), ErrorCode::ConfigError, "failure levels must be positive");
    require(cfg.target_epsilon > 0.0, ErrorCode::ConfigError, "target_epsilon must be positive");
}

/// The experiment's subspaces, deterministic in base_seed.
inline std::vector<Subspace> cap_subspaces(const CapExperimentConfig& cfg) {
    if (cfg.prescribed_angles) {
        auto [a, b] = subspace_pair_with_angles({cfg.ambient_dim, *cfg.prescribed_angles}, derive_seed(cfg.base_seed, 7));
        return {std::move(a), std::move(b)};
    }
    std::vector<Subspace> out;
    for (std::size_t l = 0; l < cfg.dims.size(); ++l)
        out.push_back(random_subspace(cfg.ambient_dim, cfg.dims[l], derive_seed(cfg.base_seed, 7, l)));
    return out;
}

namespace detail {

struct TrialOutcome {
    bool collapsed = false;
    std::vector<AngleRecord> angles;
    std::vector<std::vector<MetricRecord>> distances = std::vector<std::vector<MetricRecord>>(kAllDistanceKinds.size());
    std::vector<MetricRecord> affinity;
};

inline std::optional<double> median_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return median(v);
}

}  // namespace detail

inline DistortionReport run_cap_experiment(const CapExperimentConfig& cfg,
                                           const std::vector<Subspace>* subspaces_override = nullptr,
                                           const JlProjector* fixed_projector = nullptr) {
    validate(cfg);
    const std::vector<Subspace> subspaces = subspaces_override ? *subspaces_override : cap_subspaces(cfg);
    const std::size_t count = subspaces.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = i + 1; j < count; ++j) pairs.emplace_back(i, j);

    DistortionReport report;
    report.config = cfg;
    std::vector<std::vector<double>> orig_distance(pairs.size(), std::vector<double>(kAllDistanceKinds.size(), -1.0));
    std::vector<double> orig_affinity(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const Subspace& a = subspaces[pairs[p].first];
        const Subspace& b = subspaces[pairs[p].second];
        report.original_angles.push_back(canonical_angles(a, b).angles);
        orig_affinity[p] = affinity_from_angles(report.original_angles[p]);
        for (std::size_t k = 0; k < kAllDistanceKinds.size(); ++k)
            if (a.dim() == b.dim() || supports_unequal_dims(kAllDistanceKinds[k]))
                orig_distance[p][k] = distance_from_angles(report.original_angles[p], a.dim(), b.dim(), kAllDistanceKinds[k]);
    }

    const std::size_t levels = cfg.target_dims.size();
    std::vector<detail::TrialOutcome> outcomes(levels * cfg.trials);
    parallel_for(outcomes.size(), cfg.threads, [&](std::size_t job) {
        const std::size_t li = job / cfg.trials;
        const std::size_t trial = job % cfg.trials;
        const std::size_t n = cfg.target_dims[li];
        auto& out = outcomes[job];
        std::optional<JlProjector> owned;
        if (!fixed_projector) owned = make_projector(cfg.family, cfg.ambient_dim, n, derive_seed(cfg.base_seed, n, trial));
        const JlProjector& proj = fixed_projector ? *fixed_projector : *owned;
        std::vector<Subspace> images;
        try {
            for (const auto& s : subspaces) images.push_back(project_subspace(proj, s).image);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DimensionCollapsed) throw;
            out.collapsed = true;
            return;
        }
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const Subspace& a = images[pairs[p].first];
            const Subspace& b = images[pairs[p].second];
            const Vector psi = canonical_angles(a, b).angles;
            const Vector& theta = report.original_angles[p];
            for (std::size_t k = 0; k < psi.size(); ++k) out.angles.push_back({n, trial, p, k, theta[k], psi[k]});
            out.affinity.push_back({n, trial, p, orig_affinity[p], affinity_from_angles(psi)});
            for (std::size_t k = 0; k < kAllDistanceKinds.size(); ++k)
                if (orig_distance[p][k] >= 0.0)
                    out.distances[k].push_back(
                        {n, trial, p, orig_distance[p][k], distance_from_angles(psi, a.dim(), b.dim(), kAllDistanceKinds[k])});
        }
    });

    report.distance_records.resize(kAllDistanceKinds.size());
    for (std::size_t li = 0; li < levels; ++li) {
        LevelSummary s;
        s.n = cfg.target_dims[li];
        std::vector<double> rel, abs_, sine, cosine, aff;
        std::vector<std::vector<double>> dist(kAllDistanceKinds.size());
        s.failure_fraction.assign(cfg.failure_levels.size(), 0.0);
        std::vector<std::size_t> failures(cfg.failure_levels.size(), 0);
        s.angle_signed_min = std::numeric_limits<double>::infinity();
        s.angle_signed_max = -std::numeric_limits<double>::infinity();
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
            auto& out = outcomes[li * cfg.trials + trial];
            if (out.collapsed) {
                ++s.collapsed_trials;
                continue;
            }
            ++s.trials;
            std::vector<double> worst(pairs.size(), -1.0);
            for (const auto& r : out.angles) {
                abs_.push_back(r.absolute());
                if (auto v = r.relative()) {
                    rel.push_back(*v);
                    worst[r.pair] = std::max(worst[r.pair], *v);
                    s.angle_signed_min = std::min(s.angle_signed_min, *r.signed_relative());
                    s.angle_signed_max = std::max(s.angle_signed_max, *r.signed_relative());
                }
                if (auto v = r.sine_relative()) sine.push_back(*v);
                if (auto v = r.cosine_relative()) cosine.push_back(*v);
                report.angle_records.push_back(r);
            }
            for (double w : worst) {
                if (w < 0.0) continue;
                ++s.failure_units;
                for (std::size_t e = 0; e < cfg.failure_levels.size(); ++e)
                    if (w > cfg.failure_levels[e]) ++failures[e];
            }
            for (const auto& r : out.affinity) {
                if (auto v = r.relative()) aff.push_back(*v);
                report.affinity_records.push_back(r);
            }
            for (std::size_t k = 0; k < kAllDistanceKinds.size(); ++k)
                for (const auto& r : out.distances[k]) {
                    if (auto v = r.relative()) dist[k].push_back(*v);
                    report.distance_records[k].push_back(r);
                }
        }
        s.relative_samples = rel.size();
        if (!rel.empty()) {
            s.angle_rel_median = median(rel);
            s.angle_rel_p95 = quantile(rel, 0.95);
        } else {
            s.angle_signed_min = s.angle_signed_max = 0.0;
        }
        if (!abs_.empty()) s.angle_abs_median = median(abs_);
        s.sine_rel_median = detail::median_of(sine);
        s.cosine_rel_median = detail::median_of(cosine);
        s.affinity_rel_median = detail::median_of(aff);
        for (auto& d : dist) s.distance_rel_median.push_back(detail::median_of(d));
        for (std::size_t e = 0; e < failures.size(); ++e)
            s.failure_fraction[e] = s.failure_units == 0 ? 0.0 : static_cast<double>(failures[e]) / static_cast<double>(s.failure_units);
        if (s.collapsed_trials > 0)
            report.warnings.push_back("n=" + std::to_string(s.n) + ": " + std::to_string(s.collapsed_trials) +
                                      " trial(s) collapsed dimension");
        report.levels.push_back(std::move(s));
    }

    std::vector<double> ns, meds;
    for (const auto& s : report.levels)
        if (s.relative_samples > 0 && s.angle_rel_median > 0.0) {
            ns.push_back(static_cast<double>(s.n));
            meds.push_back(s.angle_rel_median);
        }
    try {
        report.decay = fit_decay_slope(ns, meds);
    } catch (const Error&) {
        report.warnings.push_back("decay slope not fitted: fewer than 3 levels with positive median distortion");
    }
    return report;
}

/// Observed failure fraction at level epsilon and target dimension n.
struct FailurePoint {
    double epsilon;
    double n;
    double fraction;
    std::size_t units;
};

struct C2Estimate {
    double c2_hat = 0.0;
    bool lower_bound = false;  // no failures observed; c2_hat is a censored lower bound
    std::size_t points_used = 0;
};

/**
 * Fits log(fraction) = b - c2 * eps^2 * n over the points with
 * 0 < fraction < 1. With no failures at all, returns the censored bound
 * c2 >= ln(units) / (eps^2 n), tightest over the points.
 */
inline C2Estimate estimate_c2(std::span<const FailurePoint> points) {
    std::vector<double> xs, ys;
    bool any_failure = false;
    for (const auto& p : points) {
        if (p.fraction > 0.0) any_failure = true;
        if (p.fraction > 0.0 && p.fraction < 1.0) {
            xs.push_back(p.epsilon * p.epsilon * p.n);
            ys.push_back(std::log(p.fraction));
        }
    }
    if (!any_failure) {
        require(!points.empty(), ErrorCode::InsufficientData, "no failure data");
        C2Estimate est;
        est.lower_bound = true;
        for (const auto& p : points)
            est.c2_hat = std::max(est.c2_hat, std::log(static_cast<double>(std::max<std::size_t>(p.units, 2))) /
                                                  (p.epsilon * p.epsilon * p.n));
        return est;
    }
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const bool spread = sorted.size() >= 2 && sorted.back() > sorted.front();
    require(spread, ErrorCode::InsufficientData, "need failure fractions strictly inside (0, 1) at two eps^2 n values");
    const double m = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i] / m;
        my += ys[i] / m;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return {-sxy / sxx, false, xs.size()};
}

struct ConstantEstimates {
    double c1_hat = 0.0;
    double n_at_target = 0.0;  // fitted n where the median distortion reaches target_epsilon
    C2Estimate c2;
    std::string window;        // fitting windows used
};

/**
 * c1 from the decay fit: n* solves median(n*) = target_epsilon and
 * c1 = n* eps^2 / max(d, ln L). c2 from the failure-fraction decay over all
 * (level, n) points.
 */
inline ConstantEstimates estimate_constants(const DistortionReport& report) {
    const auto& cfg = report.config;
    require(report.levels.size() >= 3, ErrorCode::InsufficientData, "need at least 3 target dims");
    for (const auto& s : report.levels)
        require(s.trials >= 200, ErrorCode::InsufficientData,
                "need >= 200 completed trials per n (n=" + std::to_string(s.n) + " has " + std::to_string(s.trials) + ")");
    require(report.decay.has_value() && report.decay->slope < 0.0, ErrorCode::InsufficientData,
            "median distortion does not decay with n");

    ConstantEstimates est;
    const double eps = cfg.target_epsilon;
    est.n_at_target = std::exp((std::log(eps) - report.decay->intercept) / report.decay->slope);
    std::size_t max_dim = cfg.prescribed_angles ? cfg.prescribed_angles->size() : 0;
    for (std::size_t d : cfg.dims) max_dim = std::max(max_dim, d);
    const double complexity = std::max(static_cast<double>(max_dim), std::log(static_cast<double>(cfg.subspace_count())));
    est.c1_hat = est.n_at_target * eps * eps / complexity;

    std::vector<FailurePoint> points;
    for (const auto& s : report.levels)
        for (std::size_t e = 0; e < cfg.failure_levels.size(); ++e)
            points.push_back({cfg.failure_levels[e], static_cast<double>(s.n), s.failure_fraction[e], s.failure_units});
    est.c2 = estimate_c2(points);

    est.window = "c1: log-log fit of median relative angle distortion over n in [" +
                 std::to_string(report.levels.front().n) + ", " + std::to_string(report.levels.back().n) +
                 "], solved at eps=" + std::to_string(eps) + "; c2: log failure fraction vs eps^2 n over " +
                 std::to_string(est.c2.points_used) + " points with fraction in (0,1)";
    return est;
}

}  // namespace csl
