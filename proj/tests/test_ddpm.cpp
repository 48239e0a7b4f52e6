#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"

namespace sk = steerkit;
using sk::testing::error_code_of;
using sk::testing::max_abs_diff;
using sk::testing::random_planes;

namespace {

sk::NoiseSchedule explicit_schedule(std::vector<double> betas) {
    sk::ScheduleSpec spec;
    spec.kind = sk::ScheduleKind::explicit_betas;
    spec.betas = betas;
    return sk::build_schedule(static_cast<int>(betas.size()), spec);
}

sk::NoiseSchedule linear50() {
    sk::ScheduleSpec spec;
    spec.kind = sk::ScheduleKind::linear;
    return sk::build_schedule(50, spec);
}

}  // namespace

TEST(Schedule, SingleStepBoundary) {
    const auto s = explicit_schedule({0.1});
    EXPECT_DOUBLE_EQ(s.alpha_bar(0), 1.0);
    EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
    EXPECT_EQ(s.sigma2(1), 0.0);
}

TEST(Schedule, TwoStepProduct) {
    const auto s = explicit_schedule({0.1, 0.2});
    EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
    EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
    // (1 - 0.9) / (1 - 0.72) * 0.2
    EXPECT_NEAR(s.sigma2(2), 0.1 / 0.28 * 0.2, 1e-15);
}

TEST(Schedule, EveryKindIsStrictlyDecreasing) {
    for (auto kind : {sk::ScheduleKind::linear, sk::ScheduleKind::scaled_linear, sk::ScheduleKind::subsampled}) {
        sk::ScheduleSpec spec;
        spec.kind = kind;
        for (int T : {1, 2, 10, 50, 1000}) {
            const auto s = sk::build_schedule(T, spec);
            ASSERT_EQ(s.steps(), T);
            for (int t = 1; t <= T; ++t) {
                EXPECT_GT(s.beta(t), 0.0);
                EXPECT_LT(s.beta(t), 1.0);
                EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1)) << sk::to_string(kind) << " T=" << T << " t=" << t;
                EXPECT_NEAR(s.alpha_bar(t), s.alpha_bar(t - 1) * s.alpha(t), 1e-15);
                const double sigma2 = (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t)) * s.beta(t);
                EXPECT_NEAR(s.sigma2(t), sigma2, 1e-15);
            }
            EXPECT_GT(s.alpha_bar(T), 0.0);
        }
    }
}

TEST(Schedule, LinearEndpoints) {
    const auto s = linear50();
    EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
    EXPECT_DOUBLE_EQ(s.beta(50), 0.02);
    EXPECT_GT(s.alpha_bar(50), 0.0);
    EXPECT_LT(s.alpha_bar(50), 1.0);
}

TEST(Schedule, SubsampledKeepsTrainingCumulativeProduct) {
    const auto s = sk::build_schedule(50);
    // independent recomputation of the 1000-step training product
    double ab = 1.0;
    std::vector<double> train(1000);
    for (int i = 0; i < 1000; ++i) {
        ab *= 1.0 - (1e-4 + (0.02 - 1e-4) * i / 999.0);
        train[i] = ab;
    }
    for (int t = 1; t <= 50; ++t) EXPECT_NEAR(s.alpha_bar(t), train[(t - 1) * 20], 1e-12) << t;
}

TEST(Schedule, SubsampleOfNativeMatchesBuiltIn) {
    sk::ScheduleSpec lin;
    lin.kind = sk::ScheduleKind::linear;
    const auto native = sk::build_schedule(1000, lin);
    const auto sub = sk::subsample(native, 50);
    const auto built = sk::build_schedule(50);
    ASSERT_EQ(sub.schedule.steps(), 50);
    for (int t = 1; t <= 50; ++t) {
        EXPECT_EQ(sub.native[t], (t - 1) * 20 + 1);
        EXPECT_NEAR(sub.schedule.alpha_bar(t), native.alpha_bar(sub.native[t]), 1e-15);
        EXPECT_NEAR(sub.schedule.alpha_bar(t), built.alpha_bar(t), 1e-12);
    }
    const auto same = sk::subsample(native, 1000);
    for (int t = 1; t <= 1000; t += 97) EXPECT_NEAR(same.schedule.beta(t), native.beta(t), 1e-15);
    EXPECT_EQ(error_code_of([&] { sk::subsample(native, 1001); }), sk::ErrorCode::parameter);
}

TEST(Schedule, RejectsBadParameters) {
    sk::ScheduleSpec spec;
    spec.kind = sk::ScheduleKind::linear;
    spec.beta_start = 0.02;
    spec.beta_end = 0.01;
    EXPECT_EQ(error_code_of([&] { sk::build_schedule(10, spec); }), sk::ErrorCode::parameter);
    spec.beta_start = 0.0;
    spec.beta_end = 0.01;
    EXPECT_EQ(error_code_of([&] { sk::build_schedule(10, spec); }), sk::ErrorCode::parameter);
    spec.beta_start = 0.1;
    spec.beta_end = 1.0;
    EXPECT_EQ(error_code_of([&] { sk::build_schedule(10, spec); }), sk::ErrorCode::parameter);
    EXPECT_EQ(error_code_of([&] { sk::build_schedule(0); }), sk::ErrorCode::parameter);
    EXPECT_EQ(error_code_of([&] { explicit_schedule({0.1, 1.0}); }), sk::ErrorCode::parameter);
    const auto s = linear50();
    EXPECT_EQ(error_code_of([&] { s.beta(0); }), sk::ErrorCode::range);
    EXPECT_EQ(error_code_of([&] { s.alpha_bar(51); }), sk::ErrorCode::range);
}

TEST(Forward, AddNoiseExamples) {
    sk::Rng rng(1);
    const auto s = explicit_schedule({0.1, 0.2});
    const auto x0 = random_planes(3, 4, 5, rng);
    const auto eps = random_planes(3, 4, 5, rng);
    const sk::Planes zero(3, 4, 5);

    const auto a = sk::add_noise(x0, zero, 2, s);
    const auto b = sk::add_noise(zero, eps, 2, s);
    const auto c = sk::add_noise(x0, eps, 2, s);
    EXPECT_EQ(c.timestep, 2);
    for (std::size_t i = 0; i < x0.size(); ++i) {
        EXPECT_NEAR(a.values()[i], std::sqrt(0.72) * x0.values()[i], 1e-15);
        EXPECT_NEAR(b.values()[i], std::sqrt(0.28) * eps.values()[i], 1e-15);
        EXPECT_NEAR(c.values()[i], std::sqrt(0.72) * x0.values()[i] + std::sqrt(0.28) * eps.values()[i], 1e-15);
    }
    EXPECT_EQ(error_code_of([&] { sk::add_noise(x0, sk::Planes(3, 4, 4), 1, s); }), sk::ErrorCode::dimension);
    EXPECT_EQ(error_code_of([&] { sk::add_noise(x0, eps, 3, s); }), sk::ErrorCode::range);
}

TEST(Forward, CleanFromEpsExamples) {
    sk::Rng rng(2);
    const auto s = explicit_schedule({0.1});
    const auto xt = random_planes(2, 3, 3, rng);
    const auto eps = random_planes(2, 3, 3, rng);
    const auto out = sk::clean_from_eps(xt, eps, 1, s);
    const auto zero_eps = sk::clean_from_eps(xt, sk::Planes(2, 3, 3), 1, s);
    for (std::size_t i = 0; i < xt.size(); ++i) {
        EXPECT_NEAR(out.values()[i], (xt.values()[i] - std::sqrt(0.1) * eps.values()[i]) / std::sqrt(0.9), 1e-15);
        EXPECT_NEAR(zero_eps.values()[i], xt.values()[i] / std::sqrt(0.9), 1e-15);
    }
}

TEST(Forward, CleanFromEpsSingularWhenAlphaBarVanishes) {
    const auto s = explicit_schedule(std::vector<double>(400, 0.9));  // 0.1^400 underflows to 0
    ASSERT_EQ(s.alpha_bar(400), 0.0);
    const sk::Planes x(1, 2, 2);
    EXPECT_EQ(error_code_of([&] { sk::clean_from_eps(x, x, 400, s); }), sk::ErrorCode::singularity);
}

TEST(Forward, CleanFromVExamples) {
    sk::Rng rng(3);
    const auto s = linear50();
    const auto xt = random_planes(3, 4, 4, rng);
    const auto zero_v = sk::clean_from_v(xt, sk::Planes(3, 4, 4), 20, s);
    for (std::size_t i = 0; i < xt.size(); ++i)
        EXPECT_NEAR(zero_v.values()[i], std::sqrt(s.alpha_bar(20)) * xt.values()[i], 1e-15);

    // nearly noiseless step: out ~ x_t
    const auto tiny = explicit_schedule({1e-12});
    const auto v = random_planes(3, 4, 4, rng);
    EXPECT_LT(max_abs_diff(sk::clean_from_v(xt, v, 1, tiny), xt), 1e-5);
}

TEST(Forward, RoundTripsOverRandomInstances) {
    sk::Rng rng(4);
    const auto s = sk::build_schedule(50);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x0 = random_planes(3, 5, 7, rng, -3, 3);
        const auto eps = sk::standard_normal(3, 5, 7, rng);
        for (int t = 1; t <= 50; ++t) {
            const auto xt = sk::add_noise(x0, eps, t, s);
            EXPECT_LT(max_abs_diff(sk::clean_from_eps(xt, eps, t, s), x0), 1e-6);
            EXPECT_LT(max_abs_diff(sk::clean_from_v(xt, sk::velocity(x0, eps, t, s), t, s), x0), 1e-6);
        }
    }
}

TEST(Forward, MarginalMomentsMatchSchedule) {
    sk::Rng rng(5);
    const auto s = sk::build_schedule(50);
    const int n = 100000;
    const sk::Planes x0(1, 1, n, 0.7);
    for (int t : {1, 10, 25, 40, 50}) {
        const auto eps = sk::standard_normal(1, 1, n, rng);
        const auto xt = sk::add_noise(x0, eps, t, s);
        const auto v = xt.values();
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= n - 1;
        const double want_mean = std::sqrt(s.alpha_bar(t)) * 0.7;
        EXPECT_NEAR(mean, want_mean, 0.02 * std::max(want_mean, std::sqrt(1 - s.alpha_bar(t))));
        EXPECT_NEAR(var, 1.0 - s.alpha_bar(t), 0.02 * (1.0 - s.alpha_bar(t))) << t;
    }
}

TEST(Reverse, LastStepIsDeterministic) {
    const auto s = sk::build_schedule(50);
    sk::Rng rng(6), a(7), b(8);
    const sk::LatentSample xt(random_planes(3, 4, 4, rng), 1);
    const auto x0 = random_planes(3, 4, 4, rng);
    const auto out_a = sk::reverse_step(xt, x0, 1, s, a);
    const auto out_b = sk::reverse_step(xt, x0, 1, s, b);
    EXPECT_EQ(out_a, out_b);
    EXPECT_EQ(out_a.timestep, 0);
    // alpha_bar_0 = 1, so the mean is x0_est exactly up to rounding
    EXPECT_LT(max_abs_diff(out_a, x0), 1e-12);
}

TEST(Reverse, PosteriorMeanAndVariance) {
    const auto s = sk::build_schedule(50);
    sk::Rng rng(9);
    const int n = 100000;
    for (int t : {2, 10, 30, 50}) {
        const sk::LatentSample xt(sk::Planes(1, 1, n, 0.3), t);
        const sk::Planes x0(1, 1, n, -0.5);
        const auto out = sk::reverse_step(xt, x0, t, s, rng);
        const double ab = s.alpha_bar(t), abp = s.alpha_bar(t - 1);
        const double mu = std::sqrt(abp) * s.beta(t) / (1 - ab) * -0.5 + std::sqrt(s.alpha(t)) * (1 - abp) / (1 - ab) * 0.3;
        double mean = 0.0, var = 0.0;
        for (double v : out.values()) mean += v;
        mean /= n;
        for (double v : out.values()) var += (v - mu) * (v - mu);
        var /= n;
        EXPECT_NEAR(mean, mu, 5 * std::sqrt(s.sigma2(t) / n));
        EXPECT_NEAR(var, s.sigma2(t), 0.02 * s.sigma2(t)) << t;
    }
}

TEST(Reverse, ZeroInputsGiveCenteredNoise) {
    const auto s = sk::build_schedule(50);
    sk::Rng rng(10);
    const sk::LatentSample xt(sk::Planes(1, 1, 50000), 30);
    const auto out = sk::reverse_step(xt, sk::Planes(1, 1, 50000), 30, s, rng);
    double mean = 0.0;
    for (double v : out.values()) mean += v;
    mean /= 50000;
    EXPECT_NEAR(mean, 0.0, 5 * std::sqrt(s.sigma2(30) / 50000));
}

TEST(Reverse, SeededStepIsBitDeterministic) {
    const auto s = sk::build_schedule(50);
    sk::Rng rng(11);
    const sk::LatentSample xt(random_planes(3, 8, 8, rng), 25);
    const auto x0 = random_planes(3, 8, 8, rng);
    sk::Rng a(42), b(42);
    EXPECT_EQ(sk::reverse_step(xt, x0, 25, s, a), sk::reverse_step(xt, x0, 25, s, b));
}

TEST(Reverse, RejectsStepZero) {
    const auto s = sk::build_schedule(50);
    sk::Rng rng(12);
    const sk::LatentSample xt(sk::Planes(1, 2, 2), 0);
    EXPECT_EQ(error_code_of([&] { sk::reverse_step(xt, xt, 0, s, rng); }), sk::ErrorCode::range);
}
