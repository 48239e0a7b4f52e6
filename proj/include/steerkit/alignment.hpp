#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "steerkit/error.hpp"
#include "steerkit/geometry.hpp"
#include "steerkit/grid.hpp"

namespace steerkit {

struct AffineDepthTransform {
    double scale = 1.0;
    double shift = 0.0;
    double residual_rmse = 0.0;
    bool negative_scale = false;  // a negative fit usually means the estimate is upside down

    double operator()(double v) const noexcept { return scale * v + shift; }
};

// Least-squares (s, b) minimizing sum (s*src + b - tgt)^2. Sums are taken
// about the means, which keeps the 2x2 system well conditioned for depths
// far from zero.
inline AffineDepthTransform fit_scale_shift(std::span<const double> source, std::span<const double> target) {
    require(source.size() == target.size(), ErrorCode::dimension, "fit needs equally many sources and targets");
    const std::size_t n = source.size();
    require(n >= 2, ErrorCode::insufficient_data, "fit needs at least 2 pairs, got " + std::to_string(n));
    double ms = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ms += source[i];
        mt += target[i];
    }
    ms /= n;
    mt /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ds = source[i] - ms;
        sxx += ds * ds;
        sxy += ds * (target[i] - mt);
    }
    require(std::isfinite(sxx) && std::isfinite(sxy), ErrorCode::numeric, "non-finite values in fit");
    require(sxx > 0.0, ErrorCode::degenerate_fit, "source values have zero variance");
    AffineDepthTransform out;
    out.scale = sxy / sxx;
    out.shift = mt - out.scale * ms;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = out(source[i]) - target[i];
        rss += r * r;
    }
    out.residual_rmse = std::sqrt(rss / n);
    out.negative_scale = out.scale < 0.0;
    return out;
}

inline std::vector<double> sample_at(const Grid<double>& field, const SparseDepth& c) {
    require(field.dims() == c.dims(), ErrorCode::dimension,
            "map " + to_string(field.dims()) + " vs condition " + to_string(c.dims()));
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = field(c.points()[i].row, c.points()[i].col);
    return out;
}

inline DepthMap apply(const AffineDepthTransform& m, const Grid<double>& d, bool metric) {
    DepthMap out(d.dims(), 0.0, metric);
    auto o = out.values();
    auto v = d.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = m(v[i]);
    return out;
}

// Fits the map's values at the reference positions onto the reference depths
// and applies the fit densely.
inline DepthMap align(const Grid<double>& source, const SparseDepth& reference,
                      AffineDepthTransform* fit_out = nullptr) {
    const auto src = sample_at(source, reference);
    const auto tgt = reference.depths();
    const AffineDepthTransform m = fit_scale_shift(src, tgt);
    if (fit_out) *fit_out = m;
    return apply(m, source, true);
}

enum class ConditionFit {
    forward,  // regress the estimate on the condition values, apply to the condition
    inverse,  // regress the condition on the estimate, apply the inverse to the condition
};

inline std::string to_string(ConditionFit f) { return f == ConditionFit::forward ? "forward" : "inverse"; }

inline ConditionFit parse_condition_fit(const std::string& s) {
    if (s == "forward") return ConditionFit::forward;
    if (s == "inverse") return ConditionFit::inverse;
    fail(ErrorCode::parameter, "unknown condition fit '" + s + "' (forward|inverse)");
}

// Brings the condition into the value scale of a relative estimate. Forward
// uses the condition values as regression source. Inverse fits the estimate
// onto the condition, the same direction as the final metric alignment, and
// inverts that map; with noisy estimates the two differ by the usual
// regression attenuation.
inline std::vector<double> align_condition(const SparseDepth& c, const Grid<double>& estimate,
                                           ConditionFit mode = ConditionFit::inverse,
                                           AffineDepthTransform* fit_out = nullptr) {
    const auto est = sample_at(estimate, c);
    const auto cv = c.depths();
    std::vector<double> out(cv.size());
    if (mode == ConditionFit::forward) {
        const AffineDepthTransform m = fit_scale_shift(cv, est);
        if (fit_out) *fit_out = m;
        for (std::size_t i = 0; i < cv.size(); ++i) out[i] = m(cv[i]);
    } else {
        const AffineDepthTransform m = fit_scale_shift(est, cv);
        require(m.scale != 0.0, ErrorCode::degenerate_fit, "estimate is uncorrelated with the condition");
        if (fit_out) *fit_out = m;
        for (std::size_t i = 0; i < cv.size(); ++i) out[i] = (cv[i] - m.shift) / m.scale;
    }
    return out;
}

}  // namespace steerkit
