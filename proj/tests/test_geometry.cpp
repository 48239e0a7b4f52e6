#include <gtest/gtest.h>

#include <limits>
#include <set>

#include "helpers.hpp"

namespace sk = steerkit;
using sk::testing::error_code_of;

namespace {

// O(N^2) all-pairs oracle
sk::Grid<double> brute_force_distance(const sk::Mask& m) {
    sk::Grid<double> out(m.dims(), std::numeric_limits<double>::infinity());
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            for (int fr = 0; fr < m.rows(); ++fr)
                for (int fc = 0; fc < m.cols(); ++fc)
                    if (m(fr, fc)) out(r, c) = std::min(out(r, c), double((r - fr) * (r - fr) + (c - fc) * (c - fc)));
    return out;
}

sk::SparseDepth random_condition(sk::Dims dims, std::size_t n, sk::Rng& rng, double lo = 0.5, double hi = 5.0) {
    std::vector<int> idx(dims.area());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<sk::DepthPoint> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({idx[i] / dims.cols, idx[i] % dims.cols, u(rng)});
    return sk::SparseDepth(dims, pts);
}

sk::SamplingPositions as_positions(const sk::SparseDepth& c) {
    sk::Rng unused(0);
    return sk::select_positions(c, 1e9, 0.0, unused);
}

}  // namespace

TEST(SparseDepth, ValidationErrorsAreDistinct) {
    const sk::Dims d{4, 4};
    EXPECT_EQ(error_code_of([&] { sk::SparseDepth(d, {{4, 0, 1.0}}); }), sk::ErrorCode::out_of_bounds);
    EXPECT_EQ(error_code_of([&] { sk::SparseDepth(d, {{0, -1, 1.0}}); }), sk::ErrorCode::out_of_bounds);
    EXPECT_EQ(error_code_of([&] { sk::SparseDepth(d, {{0, 0, 0.0}}); }), sk::ErrorCode::nonpositive_depth);
    EXPECT_EQ(error_code_of([&] { sk::SparseDepth(d, {{0, 0, std::nan("")}}); }), sk::ErrorCode::nonpositive_depth);
    EXPECT_EQ(error_code_of([&] { sk::SparseDepth(d, {{1, 2, 1.0}, {1, 2, 3.0}}); }),
              sk::ErrorCode::duplicate_position);
}

TEST(DistanceTransform, HandExamples) {
    const sk::SparseDepth c({3, 3}, {{0, 0, 1.0}});
    const auto f = sk::distance_to_condition(c);
    EXPECT_DOUBLE_EQ(f(2, 2), 2.0 * std::sqrt(2.0));
    EXPECT_EQ(f(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(f(0, 2), 2.0);
    EXPECT_EQ(error_code_of([] { sk::distance_to_condition(sk::SparseDepth({3, 3}, {})); }),
              sk::ErrorCode::empty_condition);
}

TEST(DistanceTransform, MatchesBruteForceOnRandomMasks) {
    sk::Rng rng(1);
    std::uniform_int_distribution<int> side(1, 32);
    std::uniform_real_distribution<double> density(0.0, 0.3);
    for (int trial = 0; trial < 200; ++trial) {
        sk::Mask m(side(rng), side(rng), 0);
        const double p = density(rng);
        std::bernoulli_distribution on(p);
        for (auto& v : m.values()) v = on(rng);
        m.values()[std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng)] = 1;
        const auto df = sk::distance_transform(m);
        const auto oracle = brute_force_distance(m);
        for (std::size_t i = 0; i < m.size(); ++i) {
            ASSERT_EQ(df.squared.values()[i], oracle.values()[i]) << "trial " << trial << " cell " << i;
            const int f = df.nearest.values()[i];
            ASSERT_TRUE(m.values()[f]);
            const int r = static_cast<int>(i) / m.cols(), c = static_cast<int>(i) % m.cols();
            const int fr = f / m.cols(), fc = f % m.cols();
            ASSERT_EQ((r - fr) * (r - fr) + (c - fc) * (c - fc), oracle.values()[i]);
        }
    }
}

TEST(DistanceTransform, EmptyMaskHasNoNearest) {
    const auto df = sk::distance_transform(sk::Mask(3, 4, 0));
    for (auto v : df.nearest.values()) EXPECT_EQ(v, -1);
}

TEST(SelectPositions, DenseConditionHasNoFill) {
    sk::Rng rng(2);
    const auto c = random_condition({6, 7}, 42, rng);
    const auto P = sk::select_positions(c, 1.0, 5.0, rng);
    EXPECT_EQ(P.size(), c.size());
    EXPECT_EQ(P.condition_count(), c.size());
}

TEST(SelectPositions, FillRespectsZetaAndDensity) {
    // ring of points around an empty 40x40 center
    std::vector<sk::DepthPoint> pts;
    for (int r = 0; r < 60; ++r)
        for (int q = 0; q < 60; ++q)
            if ((r < 10 || r >= 50 || q < 10 || q >= 50) && (r + q) % 3 == 0) pts.push_back({r, q, 1.0 + r * 0.01});
    const sk::SparseDepth c({60, 60}, pts);
    const auto dist = sk::distance_to_condition(c);
    std::size_t eligible = 0;
    for (double v : dist.values()) eligible += v > 7.0;

    sk::Rng rng(3);
    const auto P = sk::select_positions(c, 7.0, 1.0, rng);
    ASSERT_EQ(P.condition_count(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(P.origin[i], sk::Origin::condition);
        EXPECT_EQ(P.positions[i], (sk::Pixel{c.points()[i].row, c.points()[i].col}));
    }
    const std::size_t fill = P.size() - c.size();
    EXPECT_EQ(fill, static_cast<std::size_t>(std::llround(eligible / 49.0)));
    std::set<std::pair<int, int>> seen;
    for (const auto& p : P.positions) EXPECT_TRUE(seen.insert({p.row, p.col}).second);
    for (std::size_t i = c.size(); i < P.size(); ++i) {
        EXPECT_EQ(P.origin[i], sk::Origin::fill);
        EXPECT_GT(dist(P.positions[i].row, P.positions[i].col), 7.0);
    }

    sk::Rng again(3);
    const auto Q = sk::select_positions(c, 7.0, 1.0, again);
    EXPECT_EQ(P.positions, Q.positions);
}

TEST(SelectPositions, RejectsBadParameters) {
    sk::Rng rng(4);
    const sk::SparseDepth c({4, 4}, {{0, 0, 1.0}});
    EXPECT_EQ(error_code_of([&] { sk::select_positions(c, 0.0, 1.0, rng); }), sk::ErrorCode::parameter);
    EXPECT_EQ(error_code_of([&] { sk::select_positions(c, 2.0, -1.0, rng); }), sk::ErrorCode::parameter);
}

TEST(Interpolation, ReproducesAffineFieldsInsideHull) {
    sk::Rng rng(5);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const sk::Dims dims{40 + trial, 50};
        const auto c = random_condition(dims, 30 + 5 * trial, rng);
        const auto P = as_positions(c);
        const double a = coef(rng), b = coef(rng), d = coef(rng);
        std::vector<double> vals;
        for (const auto& p : P.positions) vals.push_back(a * p.row + b * p.col + d);
        const sk::ScatteredInterpolator interp(P.dims, P.positions);
        const auto f = interp(vals);
        std::size_t covered = 0;
        for (int r = 0; r < dims.rows; ++r)
            for (int q = 0; q < dims.cols; ++q)
                if (interp.covered(r, q)) {
                    ++covered;
                    ASSERT_NEAR(f(r, q), a * r + b * q + d, 1e-9);
                }
        EXPECT_GT(covered, dims.area() / 4);
        for (std::size_t i = 0; i < P.size(); ++i)
            EXPECT_EQ(f(P.positions[i].row, P.positions[i].col), vals[i]);
    }
}

TEST(Interpolation, CoverageIsTheConvexHull) {
    // square corners: the hull is the full 11x11 box
    const std::vector<sk::Pixel> pos{{0, 0}, {0, 10}, {10, 0}, {10, 10}};
    const sk::ScatteredInterpolator interp({11, 11}, pos);
    EXPECT_EQ(interp.triangle_count(), 2u);
    for (int r = 0; r < 11; ++r)
        for (int q = 0; q < 11; ++q) EXPECT_TRUE(interp.covered(r, q));
    // triangle: pixels beyond the hypotenuse are outside
    const sk::ScatteredInterpolator tri({11, 11}, std::vector<sk::Pixel>{{0, 0}, {0, 10}, {10, 0}});
    EXPECT_TRUE(tri.covered(5, 5));
    EXPECT_FALSE(tri.covered(6, 5));
    EXPECT_FALSE(tri.covered(10, 10));
}

TEST(Interpolation, NearestOutsideHull) {
    const std::vector<sk::Pixel> pos{{2, 2}, {2, 4}, {4, 2}};
    const sk::ScatteredInterpolator interp({10, 10}, pos);
    const auto f = interp(std::vector<double>{1.0, 2.0, 3.0});
    EXPECT_EQ(f(0, 0), 1.0);
    EXPECT_EQ(f(0, 9), 2.0);
    EXPECT_EQ(f(9, 0), 3.0);
}

TEST(Interpolation, DegenerateSets) {
    const sk::ScatteredInterpolator single({5, 6}, std::vector<sk::Pixel>{{3, 3}});
    const auto flat = single(std::vector<double>{4.5});
    for (double v : flat.values()) EXPECT_EQ(v, 4.5);

    // collinear: no triangles, nearest-sample fallback
    const std::vector<sk::Pixel> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const sk::ScatteredInterpolator col({4, 4}, line);
    EXPECT_EQ(col.triangle_count(), 0u);
    const auto f = col(std::vector<double>{1, 2, 3, 4});
    for (int i = 0; i < 4; ++i) EXPECT_EQ(f(i, i), i + 1.0);
    EXPECT_EQ(f(0, 3), f(0, 3));  // defined everywhere
    for (double v : f.values()) EXPECT_TRUE(std::isfinite(v));

    EXPECT_EQ(error_code_of([] { sk::ScatteredInterpolator({3, 3}, std::vector<sk::Pixel>{}); }),
              sk::ErrorCode::empty_condition);
    EXPECT_EQ(error_code_of([] { sk::ScatteredInterpolator({3, 3}, std::vector<sk::Pixel>{{1, 1}, {1, 1}}); }),
              sk::ErrorCode::duplicate_position);
    EXPECT_EQ(error_code_of([] {
                  sk::ScatteredInterpolator i({3, 3}, std::vector<sk::Pixel>{{1, 1}});
                  i(std::vector<double>{1.0, 2.0});
              }),
              sk::ErrorCode::dimension);
}

TEST(Interpolation, CocircularGridTriangulates) {
    // a regular lattice has many cocircular quadruples
    std::vector<sk::Pixel> pos;
    for (int r = 0; r <= 20; r += 5)
        for (int q = 0; q <= 20; q += 5) pos.push_back({r, q});
    const sk::ScatteredInterpolator interp({21, 21}, pos);
    EXPECT_EQ(interp.triangle_count(), 32u);
    std::vector<double> vals;
    for (const auto& p : pos) vals.push_back(3.0 * p.row - p.col);
    const auto f = interp(vals);
    for (int r = 0; r < 21; ++r)
        for (int q = 0; q < 21; ++q) {
            ASSERT_TRUE(interp.covered(r, q));
            ASSERT_NEAR(f(r, q), 3.0 * r - q, 1e-9);
        }
}

TEST(Phi, AffineConstantAndFullGrid) {
    sk::Rng rng(6);
    const auto c = random_condition({30, 30}, 60, rng);
    const auto P = as_positions(c);
    sk::DepthMap plane(30, 30);
    for (int r = 0; r < 30; ++r)
        for (int q = 0; q < 30; ++q) plane(r, q) = 0.1 * r - 0.05 * q + 2.0;
    const sk::ScatteredInterpolator interp(P.dims, P.positions);
    const auto f = sk::phi1(plane, P);
    for (int r = 0; r < 30; ++r)
        for (int q = 0; q < 30; ++q)
            if (interp.covered(r, q)) {
                EXPECT_NEAR(f(r, q), plane(r, q), 1e-9);
            }

    const auto constant = sk::phi1(sk::DepthMap(30, 30, 1.25), P);
    for (double v : constant.values()) EXPECT_NEAR(v, 1.25, 1e-12);

    std::vector<sk::DepthPoint> all;
    for (int r = 0; r < 6; ++r)
        for (int q = 0; q < 5; ++q) all.push_back({r, q, 1.0});
    const auto Pall = as_positions(sk::SparseDepth({6, 5}, all));
    sk::DepthMap noisy(6, 5);
    for (double& v : noisy.values()) v = std::uniform_real_distribution<double>(0, 1)(rng);
    EXPECT_EQ(static_cast<const sk::Grid<double>&>(sk::phi1(noisy, Pall)), static_cast<const sk::Grid<double>&>(noisy));
}

TEST(Phi, AgreementMakesPhi2EqualPhi1) {
    sk::Rng rng(7);
    const auto c = random_condition({40, 40}, 50, rng);
    const auto P = sk::select_positions(c, 3.0, 1.0, rng);
    ASSERT_GT(P.size(), c.size());
    sk::DepthMap x0(40, 40);
    for (double& v : x0.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto agree = sk::sample_at(x0, c);
    EXPECT_EQ(static_cast<const sk::Grid<double>&>(sk::phi1(x0, P)),
              static_cast<const sk::Grid<double>&>(sk::phi2(x0, agree, P)));
}

TEST(Phi, Phi2ReproducesConditionPlane) {
    sk::Rng rng(8);
    std::vector<sk::DepthPoint> pts;
    const auto base = random_condition({30, 40}, 80, rng);
    for (auto p : base.points()) {
        p.depth = 1.0 + 0.02 * p.row + 0.03 * p.col;
        pts.push_back(p);
    }
    const sk::SparseDepth c({30, 40}, pts);
    const auto P = as_positions(c);
    sk::DepthMap x0(30, 40, 0.0);
    const sk::ScatteredInterpolator interp(P.dims, P.positions);
    const auto f = sk::phi2(x0, c.depths(), P);
    for (int r = 0; r < 30; ++r)
        for (int q = 0; q < 40; ++q)
            if (interp.covered(r, q)) {
                EXPECT_NEAR(f(r, q), 1.0 + 0.02 * r + 0.03 * q, 1e-9);
            }
}

TEST(Phi, EmptyConditionMakesPhi2EqualPhi1) {
    sk::Rng rng(9);
    const sk::SparseDepth none({12, 12}, {});
    const auto P = sk::select_positions(none, 3.0, 1.0, rng);
    ASSERT_EQ(P.condition_count(), 0u);
    ASSERT_GT(P.size(), 0u);
    sk::DepthMap x0(12, 12);
    for (double& v : x0.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    EXPECT_EQ(static_cast<const sk::Grid<double>&>(sk::phi1(x0, P)),
              static_cast<const sk::Grid<double>&>(sk::phi2(x0, std::vector<double>{}, P)));
}

TEST(Phi, ErrorPaths) {
    const sk::SamplingPositions empty{{4, 4}, {}, {}};
    const sk::DepthMap x0(4, 4);
    EXPECT_EQ(error_code_of([&] { sk::phi1(x0, empty); }), sk::ErrorCode::empty_condition);
    sk::Rng rng(10);
    const auto P = as_positions(sk::SparseDepth({4, 4}, {{1, 1, 1.0}, {2, 3, 1.0}}));
    EXPECT_EQ(error_code_of([&] { sk::phi1(sk::DepthMap(5, 4), P); }), sk::ErrorCode::dimension);
    EXPECT_EQ(error_code_of([&] { sk::phi2(x0, std::vector<double>{1.0}, P); }), sk::ErrorCode::dimension);
}
