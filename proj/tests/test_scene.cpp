#include <gtest/gtest.h>

#include "helpers.hpp"

namespace sk = steerkit;
using sk::testing::error_code_of;

namespace {

sk::SceneSpec base(int rows = 40, int cols = 60) {
    sk::SceneSpec s;
    s.dims = {rows, cols};
    s.camera = {50.0, 50.0, cols / 2.0, rows / 2.0};
    return s;
}

}  // namespace

TEST(Scene, FrontoParallelPlane) {
    auto s = base();
    s.primitives.push_back({sk::PlaneShape{{0, 0, 1}, 2.0}});
    const auto [rgb, depth] = sk::synth_scene(s);
    EXPECT_TRUE(depth.metric());
    for (double v : depth.values()) EXPECT_NEAR(v, 2.0, 1e-12);
    ASSERT_EQ(rgb.channels(), 3);
    for (double v : rgb.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Scene, TiltedPlaneHasAffineInverseDepth) {
    auto s = base();
    const double n[3] = {0.3, -0.2, 0.9};
    const double norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    const sk::Vec3 unit{n[0] / norm, n[1] / norm, n[2] / norm};
    const double offset = 3.0;
    s.primitives.push_back({sk::PlaneShape{unit, offset}});
    const auto depth = sk::synth_scene(s).second;
    for (int r = 0; r < s.dims.rows; ++r)
        for (int c = 0; c < s.dims.cols; ++c) {
            // 1/z = (n . ray) / offset with ray = ((c + 0.5 - cx)/fx, (r + 0.5 - cy)/fy, 1)
            const double x = (c + 0.5 - s.camera.cx) / s.camera.fx, y = (r + 0.5 - s.camera.cy) / s.camera.fy;
            const double inv = (unit[0] * x + unit[1] * y + unit[2]) / offset;
            ASSERT_GT(depth(r, c), 0.0);
            EXPECT_NEAR(1.0 / depth(r, c), inv, 1e-12);
        }
}

TEST(Scene, PlaneBehindCameraIsAMiss) {
    auto s = base();
    s.primitives.push_back({sk::PlaneShape{{0, 0, 1}, -2.0}});
    const auto [rgb, depth] = sk::synth_scene(s);
    for (double v : depth.values()) EXPECT_EQ(v, 0.0);
    for (double v : rgb.values()) EXPECT_EQ(v, 0.0);
}

TEST(Scene, SphereCenterDepth) {
    auto s = base(41, 61);
    s.camera.cx = 30.5;
    s.camera.cy = 20.5;  // pixel (20, 30) looks straight down the axis
    s.primitives.push_back({sk::SphereShape{{0, 0, 4}, 1.0}});
    const auto depth = sk::synth_scene(s).second;
    EXPECT_NEAR(depth(20, 30), 3.0, 1e-12);
    EXPECT_EQ(depth(0, 0), 0.0);
}

TEST(Scene, OcclusionTakesNearestSurface) {
    auto s = base();
    const sk::BoxShape near_box{{-0.6, -0.4, 2.0}, {0.2, 0.4, 2.5}};
    const sk::BoxShape far_box{{-0.2, -0.6, 3.0}, {0.7, 0.3, 3.8}};
    auto one = s, two = s;
    one.primitives.push_back({near_box});
    two.primitives.push_back({far_box});
    s.primitives = {{near_box}, {far_box}};
    const auto both = sk::synth_scene(s).second;
    const auto a = sk::synth_scene(one).second, b = sk::synth_scene(two).second;
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < both.size(); ++i) {
        const double x = a.values()[i], y = b.values()[i];
        const double want = x > 0 && y > 0 ? std::min(x, y) : std::max(x, y);
        EXPECT_DOUBLE_EQ(both.values()[i], want);
        overlap += x > 0 && y > 0;
    }
    EXPECT_GT(overlap, 0u);
    // the front face of the near box is at z = 2
    EXPECT_NEAR(both(20, 28), 2.0, 1e-12);
}

TEST(Scene, Errors) {
    EXPECT_EQ(error_code_of([] { sk::synth_scene(base()); }), sk::ErrorCode::parameter);
    auto s = base();
    s.primitives.push_back({sk::PlaneShape{}});
    s.camera.fx = 0.0;
    EXPECT_EQ(error_code_of([&] { sk::synth_scene(s); }), sk::ErrorCode::parameter);
    s = base(0, 5);
    s.primitives.push_back({sk::PlaneShape{}});
    EXPECT_EQ(error_code_of([&] { sk::synth_scene(s); }), sk::ErrorCode::dimension);
}

TEST(Scene, RandomRoomsAreDenseAndDeterministic) {
    for (std::uint64_t seed : {1, 2, 3}) {
        sk::Rng a(seed), b(seed);
        const auto sa = sk::random_room(a, {96, 128});
        const auto ra = sk::synth_scene(sa);
        const auto rb = sk::synth_scene(sk::random_room(b, {96, 128}));
        EXPECT_EQ(ra.first, rb.first);
        EXPECT_EQ(ra.second, rb.second);
        for (double v : ra.second.values()) {
            EXPECT_GT(v, 0.2);
            EXPECT_LT(v, 20.0);
        }
    }
    const auto rooms = sk::synthetic_rooms(2, 9, {48, 64});
    EXPECT_EQ(rooms[0].id, "room0000");
    EXPECT_EQ(rooms[1].id, "room0001");
    EXPECT_NE(rooms[0].gt, rooms[1].gt);
    EXPECT_EQ(sk::synthetic_rooms(2, 9, {48, 64})[1].gt, rooms[1].gt);
}
