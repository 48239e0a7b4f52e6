#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "steerkit/steerkit.hpp"

namespace steerkit::testing {

inline Planes random_planes(int channels, int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Planes p(channels, rows, cols);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : p.values()) v = u(rng);
    return p;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs_diff(const Planes& a, const Planes& b) { return max_abs_diff(a.values(), b.values()); }

template <class T>
inline double max_abs_diff(const Grid<T>& a, const Grid<T>& b) {
    return max_abs_diff(a.values(), b.values());
}

// Runs f and returns the code of the steerkit::Error it throws.
template <class F>
std::optional<ErrorCode> error_code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace steerkit::testing
