#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "csl/capbench.hpp"

using namespace csl;

namespace {

constexpr double kPi = std::numbers::pi;

CapExperimentConfig small_config() {
    CapExperimentConfig cfg;
    cfg.ambient_dim = 512;
    cfg.prescribed_angles = Vector{0.2, 0.5, 0.9, 1.3};
    cfg.target_dims = {32, 64, 128, 256};
    cfg.trials = 60;
    cfg.base_seed = 17;
    cfg.threads = 2;
    return cfg;
}

const DistortionReport& small_report() {
    static const DistortionReport r = run_cap_experiment(small_config());
    return r;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Quantile, LinearInterpolation) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
    EXPECT_EQ(quantile({0.0, 10.0}, 0.95), 9.5);
    EXPECT_EQ(code_of([] { median({}); }), ErrorCode::DegenerateInput);
}

TEST(FitDecaySlope, ExactInverseSquareRoot) {
    const std::vector<double> ns{64, 128, 256, 512, 1024};
    std::vector<double> med;
    for (double n : ns) med.push_back(3.0 / std::sqrt(n));
    const DecayFit fit = fit_decay_slope(ns, med);
    EXPECT_NEAR(fit.slope, -0.5, 1e-10);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-10);
    EXPECT_NEAR(fit.residual, 0.0, 1e-12);
}

TEST(FitDecaySlope, ConstantMedians) {
    const std::vector<double> ns{10, 20, 40}, med{0.3, 0.3, 0.3};
    EXPECT_NEAR(fit_decay_slope(ns, med).slope, 0.0, 1e-14);
}

TEST(FitDecaySlope, Degenerate) {
    const std::vector<double> two{10, 20}, m2{0.1, 0.2};
    EXPECT_EQ(code_of([&] { fit_decay_slope(two, m2); }), ErrorCode::DegenerateInput);
    const std::vector<double> repeated{10, 10, 20}, m3{0.1, 0.1, 0.2};
    EXPECT_EQ(code_of([&] { fit_decay_slope(repeated, m3); }), ErrorCode::DegenerateInput);
    const std::vector<double> ns{10, 20, 40}, zero{0.1, 0.0, 0.2};
    EXPECT_EQ(code_of([&] { fit_decay_slope(ns, zero); }), ErrorCode::DegenerateInput);
}

TEST(CapConfig, Validation) {
    CapExperimentConfig cfg = small_config();
    cfg.target_dims = {2};
    EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::ConfigError);  // n < d
    cfg.target_dims = {512};
    EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::ConfigError);  // n = N
    cfg = small_config();
    cfg.trials = 0;
    EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::ConfigError);
    cfg = small_config();
    cfg.family = ProjectorFamily::SubsampledFourier;
    cfg.target_dims = {33};
    EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::ConfigError);
}

TEST(RunCap, RestrictionGivesZeroDistortion) {
    CapExperimentConfig cfg;
    cfg.ambient_dim = 40;
    cfg.dims = {3, 3, 2};
    cfg.target_dims = {10};
    cfg.trials = 3;
    // Subspaces supported on the first 10 coordinates.
    std::vector<Subspace> subs;
    Rng rng(5);
    for (std::size_t d : cfg.dims) {
        Matrix m(40, d);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.gaussian();
        subs.push_back(Subspace::span_of(m));
    }
    const JlProjector p = csl::testing::make_restriction_projector(40, 10);
    const DistortionReport r = run_cap_experiment(cfg, &subs, &p);
    ASSERT_EQ(r.levels.size(), 1u);
    for (const auto& a : r.angle_records) EXPECT_NEAR(a.absolute(), 0.0, 1e-12);
    for (const auto& kind : r.distance_records)
        for (const auto& d : kind) EXPECT_NEAR(d.projected, d.original, 1e-12);
    EXPECT_NEAR(r.levels[0].angle_rel_median, 0.0, 1e-10);
    for (double f : r.levels[0].failure_fraction) EXPECT_EQ(f, 0.0);
}

TEST(RunCap, NearFullDimensionIsNearIsometric) {
    CapExperimentConfig cfg;
    cfg.ambient_dim = 64;
    cfg.dims = {2, 2};
    cfg.target_dims = {63};
    cfg.trials = 100;
    cfg.base_seed = 3;
    const DistortionReport r = run_cap_experiment(cfg);
    EXPECT_LE(r.levels[0].angle_rel_median, 0.1);
}

TEST(RunCap, MonotoneAndTwoSided) {
    const DistortionReport& r = small_report();
    ASSERT_EQ(r.levels.size(), 4u);
    for (std::size_t i = 1; i < r.levels.size(); ++i)
        EXPECT_LT(r.levels[i].angle_rel_median, r.levels[i - 1].angle_rel_median);
    const auto& mid = r.levels[2];
    EXPECT_GT(mid.angle_signed_max, 0.0);
    EXPECT_LT(mid.angle_signed_min, 0.0);
    ASSERT_TRUE(r.decay.has_value());
    EXPECT_GE(r.decay->slope, -0.65);
    EXPECT_LE(r.decay->slope, -0.35);
}

TEST(RunCap, SummariesMatchRawRecords) {
    const DistortionReport& r = small_report();
    for (const auto& s : r.levels) {
        std::vector<double> rel;
        for (const auto& a : r.angle_records)
            if (a.n == s.n)
                if (auto v = a.relative()) rel.push_back(*v);
        EXPECT_EQ(rel.size(), s.relative_samples);
        EXPECT_DOUBLE_EQ(median(rel), s.angle_rel_median);
        EXPECT_DOUBLE_EQ(quantile(rel, 0.95), s.angle_rel_p95);
        EXPECT_LE(s.angle_rel_median, s.angle_rel_p95);
        EXPECT_EQ(s.failure_units, r.config.trials);  // one pair, all angles nonzero
        for (std::size_t e = 1; e < s.failure_fraction.size(); ++e)
            EXPECT_LE(s.failure_fraction[e], s.failure_fraction[e - 1]);  // levels increase
    }
    for (const auto& a : r.angle_records) EXPECT_GE(a.absolute(), 0.0);
}

TEST(RunCap, SineDistortionBoundedBelowQuarterPi) {
    for (const auto& a : small_report().angle_records) {
        if (a.theta > kPi / 4) continue;
        EXPECT_LE(*a.sine_relative(), 1.5 * *a.relative() + 1e-14);
    }
}

// Lipschitz transfer bounds distance distortion from above only; averaging kinds can sit well below.
TEST(RunCap, DistanceDistortionTracksAngleDistortion) {
    const auto& s = small_report().levels[3];
    for (std::size_t k = 0; k < kAllDistanceKinds.size(); ++k) {
        ASSERT_TRUE(s.distance_rel_median[k].has_value());
        EXPECT_LE(*s.distance_rel_median[k], 3.0 * s.angle_rel_median) << to_string(kAllDistanceKinds[k]);
    }
}

TEST(RunCap, DeterministicAcrossThreadCounts) {
    CapExperimentConfig cfg = small_config();
    cfg.trials = 8;
    cfg.threads = 1;
    const DistortionReport a = run_cap_experiment(cfg);
    cfg.threads = 4;
    const DistortionReport b = run_cap_experiment(cfg);
    ASSERT_EQ(a.angle_records.size(), b.angle_records.size());
    for (std::size_t i = 0; i < a.angle_records.size(); ++i) {
        EXPECT_EQ(a.angle_records[i].psi, b.angle_records[i].psi);
        EXPECT_EQ(a.angle_records[i].trial, b.angle_records[i].trial);
    }
}

TEST(RunCap, AddingALevelKeepsExistingTrials) {
    CapExperimentConfig cfg = small_config();
    cfg.trials = 4;
    cfg.target_dims = {64};
    const DistortionReport a = run_cap_experiment(cfg);
    cfg.target_dims = {32, 64};
    const DistortionReport b = run_cap_experiment(cfg);
    std::vector<double> from_b;
    for (const auto& r : b.angle_records)
        if (r.n == 64) from_b.push_back(r.psi);
    ASSERT_EQ(from_b.size(), a.angle_records.size());
    for (std::size_t i = 0; i < from_b.size(); ++i) EXPECT_EQ(from_b[i], a.angle_records[i].psi);
}

TEST(RunCap, CollapsedTrialsAreCounted) {
    CapExperimentConfig cfg;
    cfg.ambient_dim = 20;
    cfg.dims = {2, 2};
    cfg.target_dims = {5};
    cfg.trials = 2;
    // span(e1, e2) vanishes under [I_5 | 0] applied to coordinates 10..11.
    const std::vector<Subspace> subs{Subspace::coordinate(20, 10, 2), Subspace::coordinate(20, 0, 2)};
    const JlProjector p = csl::testing::make_restriction_projector(20, 5);
    const DistortionReport r = run_cap_experiment(cfg, &subs, &p);
    EXPECT_EQ(r.levels[0].collapsed_trials, 2u);
    EXPECT_EQ(r.levels[0].trials, 0u);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(EstimateC2, PlantedRate) {
    std::vector<FailurePoint> pts;
    for (double eps : {0.1, 0.2, 0.3})
        for (double n : {64.0, 128.0, 256.0, 512.0}) pts.push_back({eps, n, std::exp(-0.1 * eps * eps * n), 1000});
    const C2Estimate est = estimate_c2(pts);
    EXPECT_FALSE(est.lower_bound);
    EXPECT_GE(est.c2_hat, 0.09);
    EXPECT_LE(est.c2_hat, 0.11);
}

TEST(EstimateC2, NoFailuresIsCensored) {
    const std::vector<FailurePoint> pts{{0.1, 100, 0.0, 200}, {0.2, 100, 0.0, 200}};
    const C2Estimate est = estimate_c2(pts);
    EXPECT_TRUE(est.lower_bound);
    EXPECT_GT(est.c2_hat, 0.0);
    EXPECT_NEAR(est.c2_hat, std::log(200.0) / (0.01 * 100), 1e-12);
}

TEST(EstimateConstants, NeedsEnoughTrials) {
    EXPECT_EQ(code_of([] { estimate_constants(small_report()); }), ErrorCode::InsufficientData);
}

TEST(EstimateConstants, PositiveOnAdequateRun) {
    CapExperimentConfig cfg = small_config();
    cfg.trials = 200;
    cfg.target_dims = {32, 64, 128};
    const ConstantEstimates est = estimate_constants(run_cap_experiment(cfg));
    EXPECT_GT(est.c1_hat, 0.0);
    EXPECT_GT(est.c2.c2_hat, 0.0);
    EXPECT_FALSE(est.window.empty());
}
