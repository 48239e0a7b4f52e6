#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "steerkit/ddpm.hpp"
#include "steerkit/error.hpp"
#include "steerkit/grid.hpp"

namespace steerkit {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Camera frame: x right, y down, z forward. Depth is the z coordinate.
struct Camera {
    double fx = 500.0, fy = 500.0;
    double cx = 0.0, cy = 0.0;

    Vec3 ray(int row, int col) const { return {(col + 0.5 - cx) / fx, (row + 0.5 - cy) / fy, 1.0}; }
};

struct PlaneShape {
    Vec3 normal{0, 0, 1};  // points {X : normal . X = offset}
    double offset = 1.0;
};

struct SphereShape {
    Vec3 center{0, 0, 3};
    double radius = 1.0;
};

struct BoxShape {
    Vec3 lo{-0.5, -0.5, 2.5};
    Vec3 hi{0.5, 0.5, 3.5};
};

struct Primitive {
    std::variant<PlaneShape, SphereShape, BoxShape> shape;
    Vec3 albedo{0.7, 0.7, 0.7};
};

struct SceneSpec {
    Dims dims{448, 608};
    Camera camera;
    std::vector<Primitive> primitives;
    std::uint64_t texture_seed = 0;
};

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    Vec3 normal{0, 0, -1};
};

namespace detail {

inline Hit intersect(const PlaneShape& p, const Vec3& d) {
    const double den = dot(p.normal, d);
    Hit h;
    if (std::abs(den) < 1e-12) return h;
    const double t = p.offset / den;
    if (t > 0.0) {
        h.t = t;
        h.normal = den > 0 ? Vec3{-p.normal[0], -p.normal[1], -p.normal[2]} : p.normal;
    }
    return h;
}

inline Hit intersect(const SphereShape& s, const Vec3& d) {
    const double a = dot(d, d), b = -2.0 * dot(d, s.center), c = dot(s.center, s.center) - s.radius * s.radius;
    const double disc = b * b - 4 * a * c;
    Hit h;
    if (disc < 0.0) return h;
    const double sq = std::sqrt(disc);
    double t = (-b - sq) / (2 * a);
    if (t <= 0.0) t = (-b + sq) / (2 * a);
    if (t <= 0.0) return h;
    h.t = t;
    for (int i = 0; i < 3; ++i) h.normal[i] = (t * d[i] - s.center[i]) / s.radius;
    return h;
}

inline Hit intersect(const BoxShape& b, const Vec3& d) {
    double tn = -std::numeric_limits<double>::infinity(), tf = std::numeric_limits<double>::infinity();
    int axis = 0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (0.0 < b.lo[i] || 0.0 > b.hi[i]) return {};
            continue;
        }
        double t1 = b.lo[i] / d[i], t2 = b.hi[i] / d[i];
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > tn) {
            tn = t1;
            axis = i;
        }
        tf = std::min(tf, t2);
    }
    Hit h;
    if (tn < tf && tn > 0.0) {
        h.t = tn;
        h.normal = {0, 0, 0};
        h.normal[axis] = d[axis] > 0 ? -1.0 : 1.0;
    }
    return h;
}

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double unit(std::uint64_t x) { return static_cast<double>(splitmix(x) >> 11) * 0x1.0p-53; }

}  // namespace detail

inline Hit intersect(const Primitive& p, const Vec3& d) {
    return std::visit([&](const auto& s) { return detail::intersect(s, d); }, p.shape);
}

// Z-buffer render. Depth is 0 where no primitive is hit; RGB uses Lambert
// shading with a seeded stripe texture in world coordinates.
inline std::pair<Planes, DepthMap> synth_scene(const SceneSpec& spec) {
    require(!spec.primitives.empty(), ErrorCode::parameter, "scene has no primitives");
    require(spec.dims.rows > 0 && spec.dims.cols > 0, ErrorCode::dimension, "scene dims must be positive");
    require(spec.camera.fx > 0 && spec.camera.fy > 0, ErrorCode::parameter, "focal lengths must be positive");

    const int n = static_cast<int>(spec.primitives.size());
    std::vector<std::array<double, 4>> tex(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 4; ++j) tex[i][j] = detail::unit(spec.texture_seed * 131 + i * 7 + j);

    const Vec3 light = [] {
        Vec3 l{-0.3, -0.6, -0.75};
        const double s = std::sqrt(dot(l, l));
        return Vec3{l[0] / s, l[1] / s, l[2] / s};
    }();

    Planes rgb(3, spec.dims.rows, spec.dims.cols);
    DepthMap depth(spec.dims, 0.0, true);
    for (int r = 0; r < spec.dims.rows; ++r)
        for (int c = 0; c < spec.dims.cols; ++c) {
            const Vec3 d = spec.camera.ray(r, c);
            Hit best;
            int who = -1;
            for (int i = 0; i < n; ++i) {
                const Hit h = intersect(spec.primitives[i], d);
                if (h.t < best.t) {
                    best = h;
                    who = i;
                }
            }
            if (who < 0) continue;
            depth(r, c) = best.t;  // d has unit z, so the ray parameter is the depth
            const Vec3 X{best.t * d[0], best.t * d[1], best.t};
            const auto& tx = tex[who];
            const double freq = 2.0 + 6.0 * tx[0];
            const double stripe = 0.5 + 0.5 * std::sin(freq * (X[0] * tx[1] + X[1] * tx[2] + X[2] * (1 - tx[1])) +
                                                       6.2831853 * tx[3]);
            const double shade = 0.35 + 0.65 * std::max(0.0, -dot(best.normal, light));
            for (int ch = 0; ch < 3; ++ch)
                rgb(ch, r, c) = std::clamp(spec.primitives[who].albedo[ch] * shade * (0.7 + 0.3 * stripe), 0.0, 1.0);
        }
    return {std::move(rgb), std::move(depth)};
}

// Indoor-like room: back wall with random yaw, floor, ceiling and side walls,
// one to three boxes standing on the floor and at most one sphere on the floor.
inline SceneSpec random_room(Rng& rng, Dims dims = {448, 608}) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
    SceneSpec s;
    s.dims = dims;
    s.camera.fx = s.camera.fy = 518.8 * dims.cols / 640.0;
    s.camera.cx = dims.cols / 2.0;
    s.camera.cy = dims.rows / 2.0;
    s.texture_seed = rng();
    auto color = [&] { return Vec3{uni(0.3, 0.95), uni(0.3, 0.95), uni(0.3, 0.95)}; };

    const double yaw = uni(-0.35, 0.35), D = uni(3.5, 6.0);
    s.primitives.push_back({PlaneShape{{std::sin(yaw), 0, std::cos(yaw)}, D}, color()});
    const double hcam = uni(1.0, 1.5);
    s.primitives.push_back({PlaneShape{{0, 1, 0}, hcam}, color()});
    s.primitives.push_back({PlaneShape{{0, -1, 0}, uni(1.2, 1.6)}, color()});
    s.primitives.push_back({PlaneShape{{1, 0, 0}, uni(1.5, 2.5)}, color()});
    s.primitives.push_back({PlaneShape{{-1, 0, 0}, uni(1.5, 2.5)}, color()});

    const int boxes = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < boxes; ++i) {
        const Vec3 size{uni(0.4, 1.2), uni(0.4, 1.0), uni(0.4, 1.0)};
        const double cz = uni(2.0, D - 0.8), cx = uni(-1.2, 1.2);
        BoxShape b;
        b.lo = {cx - size[0] / 2, hcam - size[1], cz - size[2] / 2};
        b.hi = {b.lo[0] + size[0], hcam, b.lo[2] + size[2]};
        s.primitives.push_back({b, color()});
    }
    if (u01(rng) < 0.5) {
        const double r = uni(0.2, 0.45);
        s.primitives.push_back({SphereShape{{uni(-1, 1), hcam - r, uni(2.0, D - 0.5)}, r}, color()});
    }
    return s;
}

}  // namespace steerkit
