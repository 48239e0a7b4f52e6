#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/polygon/voronoi.hpp>

#include "steerkit/ddpm.hpp"
#include "steerkit/error.hpp"
#include "steerkit/grid.hpp"

namespace steerkit {

struct Pixel {
    int row = 0;
    int col = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct DepthPoint {
    int row = 0;
    int col = 0;
    double depth = 0.0;
    friend bool operator==(const DepthPoint&, const DepthPoint&) = default;
};

// Sparse metric observations (the condition). Positions are unique and
// in-bounds; depths are finite and positive.
class SparseDepth {
public:
    SparseDepth() = default;
    SparseDepth(Dims dims, std::vector<DepthPoint> points) : dims_(dims), points_(std::move(points)) { validate(); }

    Dims dims() const noexcept { return dims_; }
    int rows() const noexcept { return dims_.rows; }
    int cols() const noexcept { return dims_.cols; }
    const std::vector<DepthPoint>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    std::vector<double> depths() const {
        std::vector<double> out(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) out[i] = points_[i].depth;
        return out;
    }

    Mask mask() const {
        Mask m(dims_, 0);
        for (const auto& p : points_) m(p.row, p.col) = 1;
        return m;
    }

private:
    void validate() const {
        require(dims_.rows >= 0 && dims_.cols >= 0, ErrorCode::dimension, "negative condition dimensions");
        std::vector<std::uint8_t> seen(dims_.area(), 0);
        for (const auto& p : points_) {
            const std::string where = "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
            require(dims_.contains(p.row, p.col), ErrorCode::out_of_bounds,
                    "point " + where + " outside " + to_string(dims_));
            require(std::isfinite(p.depth) && p.depth > 0.0, ErrorCode::nonpositive_depth,
                    "point " + where + " has depth " + std::to_string(p.depth));
            auto& s = seen[static_cast<std::size_t>(p.row) * dims_.cols + p.col];
            require(!s, ErrorCode::duplicate_position, "point " + where + " appears twice");
            s = 1;
        }
    }

    Dims dims_{};
    std::vector<DepthPoint> points_;
};

enum class Origin : std::uint8_t { condition, fill };

// Steering positions: the condition positions first, in condition order, then fill.
struct SamplingPositions {
    Dims dims{};
    std::vector<Pixel> positions;
    std::vector<Origin> origin;

    std::size_t size() const noexcept { return positions.size(); }
    std::size_t condition_count() const noexcept {
        return static_cast<std::size_t>(std::count(origin.begin(), origin.end(), Origin::condition));
    }
};

// Exact squared Euclidean distance transform (Felzenszwalb & Huttenlocher)
// with the nearest feature pixel of each cell. Features are nonzero mask cells.
struct DistanceField {
    Grid<double> squared;
    Grid<std::int32_t> nearest;  // linear index of the nearest feature, -1 if none
};

namespace detail {

// 1D lower envelope of parabolas rooted at (q, f[q]); writes d[q] and argmin.
inline void envelope_1d(const double* f, int n, double* d, int* arg, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (!std::isfinite(f[q])) continue;
        while (k >= 0) {
            const int p = v[k];
            const double s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            break;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
        }
        z[k + 1] = inf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) {
            d[q] = inf;
            arg[q] = -1;
        }
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const int p = v[j];
        d[q] = double(q - p) * (q - p) + f[p];
        arg[q] = p;
    }
}

}  // namespace detail

inline DistanceField distance_transform(const Mask& features) {
    const int R = features.rows(), C = features.cols();
    constexpr double inf = std::numeric_limits<double>::infinity();
    DistanceField out{Grid<double>(R, C, inf), Grid<std::int32_t>(R, C, -1)};
    if (R == 0 || C == 0) return out;

    const int n = std::max(R, C);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n), arg(n);
    Grid<double> colsq(R, C, inf);
    Grid<int> colarg(R, C, -1);
    for (int c = 0; c < C; ++c) {
        for (int r = 0; r < R; ++r) f[r] = features(r, c) ? 0.0 : inf;
        detail::envelope_1d(f.data(), R, d.data(), arg.data(), v, z);
        for (int r = 0; r < R; ++r) {
            colsq(r, c) = d[r];
            colarg(r, c) = arg[r];
        }
    }
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) f[c] = colsq(r, c);
        detail::envelope_1d(f.data(), C, d.data(), arg.data(), v, z);
        for (int c = 0; c < C; ++c) {
            out.squared(r, c) = d[c];
            if (arg[c] >= 0) out.nearest(r, c) = static_cast<std::int32_t>(colarg(r, arg[c]) * C + arg[c]);
        }
    }
    return out;
}

inline Grid<double> distance_to_condition(const SparseDepth& c) {
    require(!c.empty(), ErrorCode::empty_condition, "distance to an empty condition");
    DistanceField df = distance_transform(c.mask());
    Grid<double> out(c.dims());
    auto o = out.values();
    auto s = df.squared.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::sqrt(s[i]);
    return out;
}

// Condition positions plus fill drawn uniformly (without replacement) from
// cells farther than zeta from every condition point. The fill count is
// fill_density per zeta x zeta cell of the eligible area.
inline SamplingPositions select_positions(const SparseDepth& c, double zeta, double fill_density, Rng& rng) {
    require(zeta > 0.0, ErrorCode::parameter, "zeta must be positive");
    require(fill_density >= 0.0, ErrorCode::parameter, "fill density must be nonnegative");
    SamplingPositions P;
    P.dims = c.dims();
    for (const auto& p : c.points()) {
        P.positions.push_back({p.row, p.col});
        P.origin.push_back(Origin::condition);
    }
    std::vector<std::int32_t> eligible;
    if (c.empty()) {
        eligible.resize(c.dims().area());
        for (std::size_t i = 0; i < eligible.size(); ++i) eligible[i] = static_cast<std::int32_t>(i);
    } else {
        const DistanceField df = distance_transform(c.mask());
        const double z2 = zeta * zeta;
        auto s = df.squared.values();
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s[i] > z2) eligible.push_back(static_cast<std::int32_t>(i));
    }
    const auto n_fill = std::min<std::size_t>(
        eligible.size(), static_cast<std::size_t>(std::llround(fill_density * eligible.size() / (zeta * zeta))));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n_fill; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
        std::swap(eligible[i], eligible[pick(rng)]);
        const int idx = eligible[i];
        P.positions.push_back({idx / c.cols(), idx % c.cols()});
        P.origin.push_back(Origin::fill);
    }
    return P;
}

// Piecewise-linear interpolation over the Delaunay triangulation of a fixed
// position set, with nearest-sample values outside the convex hull. The
// per-pixel stencil (three sample indices and barycentric weights) is built
// once, so repeated evaluation with new values is a gather.
class ScatteredInterpolator {
public:
    ScatteredInterpolator() = default;

    ScatteredInterpolator(Dims dims, std::span<const Pixel> positions) : dims_(dims), n_(positions.size()) {
        require(!positions.empty(), ErrorCode::empty_condition, "interpolation needs at least one position");
        const std::size_t N = dims.area();
        index_.assign(3 * N, -1);
        weight_.assign(3 * N, 0.0);
        inside_.assign(N, 0);

        for (const auto& p : positions)
            require(dims.contains(p.row, p.col), ErrorCode::out_of_bounds, "interpolation position outside grid");

        if (positions.size() >= 3) triangulate(positions);

        Mask m(dims, 0);
        for (const auto& p : positions) m(p.row, p.col) = 1;
        // map pixel -> sample index, to translate nearest-feature pixels
        Grid<std::int32_t> owner(dims, -1);
        for (std::size_t i = 0; i < positions.size(); ++i) {
            auto& o = owner(positions[i].row, positions[i].col);
            require(o < 0, ErrorCode::duplicate_position, "interpolation positions must be unique");
            o = static_cast<std::int32_t>(i);
        }
        // samples reproduce their own value exactly, whatever triangle edge they sit on
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const std::size_t px = static_cast<std::size_t>(positions[i].row) * dims.cols + positions[i].col;
            index_[3 * px] = index_[3 * px + 1] = index_[3 * px + 2] = static_cast<std::int32_t>(i);
            weight_[3 * px] = 1.0;
            weight_[3 * px + 1] = weight_[3 * px + 2] = 0.0;
        }
        const DistanceField df = distance_transform(m);
        for (std::size_t px = 0; px < N; ++px) {
            if (index_[3 * px] >= 0) continue;
            const std::int32_t f = df.nearest.values()[px];
            index_[3 * px] = index_[3 * px + 1] = index_[3 * px + 2] = owner.values()[static_cast<std::size_t>(f)];
            weight_[3 * px] = 1.0;
        }
    }

    Dims dims() const noexcept { return dims_; }
    std::size_t sample_count() const noexcept { return n_; }
    std::size_t triangle_count() const noexcept { return triangles_; }
    // true where the pixel lies inside some triangle
    bool covered(int row, int col) const {
        const std::size_t px = static_cast<std::size_t>(row) * dims_.cols + col;
        return inside_[px] != 0;
    }

    Grid<double> operator()(std::span<const double> values) const {
        require(values.size() == n_, ErrorCode::dimension,
                "interpolator built for " + std::to_string(n_) + " samples, got " + std::to_string(values.size()));
        Grid<double> out(dims_);
        auto o = out.values();
        for (std::size_t px = 0; px < o.size(); ++px) {
            const std::int32_t* id = &index_[3 * px];
            const double* w = &weight_[3 * px];
            o[px] = w[0] == 1.0 ? values[id[0]]
                                : w[0] * values[id[0]] + w[1] * values[id[1]] + w[2] * values[id[2]];
        }
        return out;
    }

private:
    void triangulate(std::span<const Pixel> positions) {
        using boost::polygon::point_data;
        std::vector<point_data<int>> pts;
        pts.reserve(positions.size());
        for (const auto& p : positions) pts.emplace_back(p.col, p.row);
        boost::polygon::voronoi_diagram<double> vd;
        boost::polygon::construct_voronoi(pts.begin(), pts.end(), &vd);

        std::vector<std::size_t> ring;
        for (const auto& vertex : vd.vertices()) {
            ring.clear();
            const auto* start = vertex.incident_edge();
            const auto* e = start;
            do {
                ring.push_back(e->cell()->source_index());
                e = e->rot_next();
            } while (e != start);
            // cocircular sites share one vertex: fan-triangulate the polygon
            for (std::size_t k = 1; k + 1 < ring.size(); ++k) raster(positions, ring[0], ring[k], ring[k + 1]);
        }
    }

    void raster(std::span<const Pixel> P, std::size_t ia, std::size_t ib, std::size_t ic) {
        const Pixel a = P[ia], b = P[ib], c = P[ic];
        auto edge = [](Pixel u, Pixel v, int r, int q) -> std::int64_t {
            return std::int64_t(v.col - u.col) * (r - u.row) - std::int64_t(v.row - u.row) * (q - u.col);
        };
        std::int64_t area = edge(a, b, c.row, c.col);
        if (area == 0) return;
        const int sign = area > 0 ? 1 : -1;
        area *= sign;
        ++triangles_;
        const int r0 = std::min({a.row, b.row, c.row}), r1 = std::max({a.row, b.row, c.row});
        const int q0 = std::min({a.col, b.col, c.col}), q1 = std::max({a.col, b.col, c.col});
        const double inv = 1.0 / static_cast<double>(area);
        for (int r = r0; r <= r1; ++r)
            for (int q = q0; q <= q1; ++q) {
                const std::int64_t wa = sign * edge(b, c, r, q);
                const std::int64_t wb = sign * edge(c, a, r, q);
                const std::int64_t wc = sign * edge(a, b, r, q);
                if (wa < 0 || wb < 0 || wc < 0) continue;
                const std::size_t px = static_cast<std::size_t>(r) * dims_.cols + q;
                if (inside_[px]) continue;
                inside_[px] = 1;
                std::int32_t* id = &index_[3 * px];
                double* w = &weight_[3 * px];
                id[0] = static_cast<std::int32_t>(ia);
                id[1] = static_cast<std::int32_t>(ib);
                id[2] = static_cast<std::int32_t>(ic);
                w[0] = wa * inv;
                w[1] = wb * inv;
                w[2] = wc * inv;
            }
    }

    Dims dims_{};
    std::size_t n_ = 0;
    std::size_t triangles_ = 0;
    std::vector<std::int32_t> index_;
    std::vector<double> weight_;
    std::vector<std::uint8_t> inside_;
};

inline DepthMap interpolate_scattered(const SamplingPositions& P, std::span<const double> values) {
    require(values.size() == P.size(), ErrorCode::dimension, "one value per position required");
    ScatteredInterpolator interp(P.dims, P.positions);
    return DepthMap(interp(values), false);
}

inline std::vector<double> sample_at(const Grid<double>& field, const SamplingPositions& P) {
    std::vector<double> out(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) out[i] = field(P.positions[i].row, P.positions[i].col);
    return out;
}

inline DepthMap phi1(const Grid<double>& x0_dec, const SamplingPositions& P, const ScatteredInterpolator& interp) {
    require(x0_dec.dims() == P.dims, ErrorCode::dimension, "phi1: estimate and positions disagree on dims");
    require(P.size() > 0, ErrorCode::empty_condition, "phi1 with no positions");
    const auto v = sample_at(x0_dec, P);
    return DepthMap(interp(v), false);
}

inline DepthMap phi1(const Grid<double>& x0_dec, const SamplingPositions& P) {
    require(P.size() > 0, ErrorCode::empty_condition, "phi1 with no positions");
    return phi1(x0_dec, P, ScatteredInterpolator(P.dims, P.positions));
}

// Values at condition-tagged positions come from `condition_values`, taken in
// the order the condition positions appear in P; fill positions read x0_dec.
inline DepthMap phi2(const Grid<double>& x0_dec, std::span<const double> condition_values,
                     const SamplingPositions& P, const ScatteredInterpolator& interp) {
    require(x0_dec.dims() == P.dims, ErrorCode::dimension, "phi2: estimate and positions disagree on dims");
    require(P.size() > 0, ErrorCode::empty_condition, "phi2 with no positions");
    auto v = sample_at(x0_dec, P);
    std::size_t k = 0;
    for (std::size_t i = 0; i < P.size(); ++i)
        if (P.origin[i] == Origin::condition) {
            require(k < condition_values.size(), ErrorCode::dimension, "phi2: too few condition values");
            v[i] = condition_values[k++];
        }
    require(k == condition_values.size(), ErrorCode::dimension, "phi2: too many condition values");
    return DepthMap(interp(v), false);
}

inline DepthMap phi2(const Grid<double>& x0_dec, std::span<const double> condition_values,
                     const SamplingPositions& P) {
    require(P.size() > 0, ErrorCode::empty_condition, "phi2 with no positions");
    return phi2(x0_dec, condition_values, P, ScatteredInterpolator(P.dims, P.positions));
}

}  // namespace steerkit
