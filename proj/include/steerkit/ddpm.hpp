#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "steerkit/error.hpp"
#include "steerkit/grid.hpp"

namespace steerkit {

using Rng = std::mt19937_64;

// x_t, a clean estimate, or a noise/velocity prediction, tagged with its step.
class LatentSample : public Planes {
public:
    LatentSample() = default;
    LatentSample(int channels, int rows, int cols, double fill = 0.0, int t = 0)
        : Planes(channels, rows, cols, fill), timestep(t) {}
    LatentSample(Planes values, int t) : Planes(std::move(values)), timestep(t) {}

    int timestep = 0;
};

inline LatentSample like(const Planes& shape, double fill = 0.0, int t = 0) {
    return LatentSample(shape.channels(), shape.rows(), shape.cols(), fill, t);
}

inline void fill_normal(std::span<double> out, Rng& rng) {
    std::normal_distribution<double> normal;
    for (double& v : out) v = normal(rng);
}

inline LatentSample standard_normal(int channels, int rows, int cols, Rng& rng, int t = 0) {
    LatentSample out(channels, rows, cols, 0.0, t);
    fill_normal(out.values(), rng);
    return out;
}

enum class ScheduleKind {
    linear,         // beta linear over the T inference steps
    scaled_linear,  // sqrt(beta) linear over the T inference steps
    subsampled,     // linear training schedule of train_steps, every (train_steps/T)-th step kept
    explicit_betas,
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::subsampled;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int train_steps = 1000;
    std::vector<double> betas;  // explicit_betas only
};

inline std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::linear: return "linear";
        case ScheduleKind::scaled_linear: return "scaled_linear";
        case ScheduleKind::subsampled: return "subsampled";
        case ScheduleKind::explicit_betas: return "explicit";
    }
    return "?";
}

inline ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "scaled_linear") return ScheduleKind::scaled_linear;
    if (s == "subsampled") return ScheduleKind::subsampled;
    if (s == "explicit") return ScheduleKind::explicit_betas;
    fail(ErrorCode::parameter, "unknown schedule kind '" + s + "'");
}

// Tables are 1-indexed by timestep; index 0 holds the boundary alpha_bar[0] = 1.
class NoiseSchedule {
public:
    NoiseSchedule() = default;

    explicit NoiseSchedule(std::vector<double> betas) {
        require(!betas.empty(), ErrorCode::parameter, "schedule needs at least one step");
        const std::size_t n = betas.size();
        beta_.assign(n + 1, 0.0);
        alpha_.assign(n + 1, 1.0);
        alpha_bar_.assign(n + 1, 1.0);
        sigma2_.assign(n + 1, 0.0);
        for (std::size_t t = 1; t <= n; ++t) {
            const double b = betas[t - 1];
            require(std::isfinite(b) && b > 0.0 && b < 1.0, ErrorCode::parameter,
                    "beta[" + std::to_string(t) + "] = " + std::to_string(b) + " outside (0,1)");
            beta_[t] = b;
            alpha_[t] = 1.0 - b;
            alpha_bar_[t] = alpha_bar_[t - 1] * alpha_[t];
            sigma2_[t] = (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]) * b;
        }
    }

    int steps() const noexcept { return static_cast<int>(beta_.size()) - 1; }
    double beta(int t) const { return beta_[check(t, 1)]; }
    double alpha(int t) const { return alpha_[check(t, 1)]; }
    double alpha_bar(int t) const { return alpha_bar_[check(t, 0)]; }
    double sigma2(int t) const { return sigma2_[check(t, 1)]; }
    std::vector<double> betas() const { return {beta_.begin() + 1, beta_.end()}; }

private:
    std::size_t check(int t, int lo) const {
        require(t >= lo && t <= steps(), ErrorCode::range,
                "timestep " + std::to_string(t) + " outside " + std::to_string(lo) + ".." + std::to_string(steps()));
        return static_cast<std::size_t>(t);
    }

    std::vector<double> beta_, alpha_, alpha_bar_, sigma2_;
};

inline NoiseSchedule build_schedule(int T, const ScheduleSpec& spec = {}) {
    require(T >= 1, ErrorCode::parameter, "step count must be at least 1");
    if (spec.kind == ScheduleKind::explicit_betas) {
        require(static_cast<int>(spec.betas.size()) == T, ErrorCode::parameter,
                "explicit schedule has " + std::to_string(spec.betas.size()) + " betas, expected " + std::to_string(T));
        return NoiseSchedule(spec.betas);
    }
    require(spec.beta_start > 0.0 && spec.beta_start <= spec.beta_end && spec.beta_end < 1.0,
            ErrorCode::parameter, "beta endpoints must satisfy 0 < start <= end < 1");

    std::vector<double> betas(static_cast<std::size_t>(T));
    auto lerp = [](double a, double b, int i, int n) { return n == 1 ? a : a + (b - a) * i / (n - 1); };
    switch (spec.kind) {
        case ScheduleKind::linear:
            for (int i = 0; i < T; ++i) betas[i] = lerp(spec.beta_start, spec.beta_end, i, T);
            break;
        case ScheduleKind::scaled_linear:
            for (int i = 0; i < T; ++i) {
                const double r = lerp(std::sqrt(spec.beta_start), std::sqrt(spec.beta_end), i, T);
                betas[i] = r * r;
            }
            break;
        case ScheduleKind::subsampled: {
            const int n = spec.train_steps;
            require(n >= T, ErrorCode::parameter, "train_steps must be at least the step count");
            const int stride = n / T;
            // cumulative product of the training schedule, kept at train index i*stride
            std::vector<double> kept;
            double ab = 1.0;
            for (int i = 0; i < n && static_cast<int>(kept.size()) < T; ++i) {
                ab *= 1.0 - lerp(spec.beta_start, spec.beta_end, i, n);
                if (i % stride == 0) kept.push_back(ab);
            }
            double prev = 1.0;
            for (int i = 0; i < T; ++i) {
                betas[i] = 1.0 - kept[i] / prev;
                prev = kept[i];
            }
            break;
        }
        case ScheduleKind::explicit_betas: break;
    }
    return NoiseSchedule(std::move(betas));
}

// Uniform subsampling of a native schedule down to `steps` inference steps.
// Inference step t maps to native timestep native[t]; the kept cumulative
// products are those at native timesteps 1, 1 + stride, 1 + 2 stride, ...
struct SubsampledSchedule {
    NoiseSchedule schedule;
    std::vector<int> native;  // index 0 unused
};

inline SubsampledSchedule subsample(const NoiseSchedule& s, int steps) {
    require(steps >= 1 && steps <= s.steps(), ErrorCode::parameter,
            "cannot subsample " + std::to_string(s.steps()) + " native steps to " + std::to_string(steps));
    const int stride = s.steps() / steps;
    SubsampledSchedule out;
    out.native.assign(static_cast<std::size_t>(steps) + 1, 0);
    std::vector<double> betas(static_cast<std::size_t>(steps));
    double prev = 1.0;
    for (int i = 0; i < steps; ++i) {
        const int t = i * stride + 1;
        out.native[i + 1] = t;
        betas[i] = 1.0 - s.alpha_bar(t) / prev;
        prev = s.alpha_bar(t);
    }
    out.schedule = NoiseSchedule(std::move(betas));
    return out;
}

inline void require_step(const NoiseSchedule& s, int t) {
    require(t >= 1 && t <= s.steps(), ErrorCode::range,
            "timestep " + std::to_string(t) + " outside 1.." + std::to_string(s.steps()));
}

inline LatentSample add_noise(const Planes& x0, const Planes& eps, int t, const NoiseSchedule& s) {
    require_same_shape(x0, eps, "add_noise");
    require_step(s, t);
    const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
    LatentSample out = like(x0, 0.0, t);
    auto o = out.values();
    auto x = x0.values(), e = eps.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + b * e[i];
    return out;
}

inline LatentSample clean_from_eps(const Planes& x_t, const Planes& eps_hat, int t, const NoiseSchedule& s) {
    require_same_shape(x_t, eps_hat, "clean_from_eps");
    require_step(s, t);
    const double ab = s.alpha_bar(t);
    require(ab > 0.0, ErrorCode::singularity, "alpha_bar is zero at t=" + std::to_string(t));
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    LatentSample out = like(x_t, 0.0, 0);
    auto o = out.values();
    auto x = x_t.values(), e = eps_hat.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (x[i] - b * e[i]) / a;
    return out;
}

inline LatentSample clean_from_v(const Planes& x_t, const Planes& v_hat, int t, const NoiseSchedule& s) {
    require_same_shape(x_t, v_hat, "clean_from_v");
    require_step(s, t);
    const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
    LatentSample out = like(x_t, 0.0, 0);
    auto o = out.values();
    auto x = x_t.values(), v = v_hat.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] - b * v[i];
    return out;
}

// v = sqrt(ab) * eps - sqrt(1 - ab) * x0
inline LatentSample velocity(const Planes& x0, const Planes& eps, int t, const NoiseSchedule& s) {
    require_same_shape(x0, eps, "velocity");
    require_step(s, t);
    const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
    LatentSample out = like(x0, 0.0, t);
    auto o = out.values();
    auto x = x0.values(), e = eps.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * e[i] - b * x[i];
    return out;
}

struct PosteriorCoefficients {
    double x0 = 0.0;
    double xt = 0.0;
    double sigma = 0.0;
};

inline PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& s) {
    require(t >= 1, ErrorCode::range, "reverse step needs t >= 1");
    require_step(s, t);
    const double ab = s.alpha_bar(t), ab_prev = s.alpha_bar(t - 1);
    return {std::sqrt(ab_prev) * s.beta(t) / (1.0 - ab), std::sqrt(s.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab),
            std::sqrt(s.sigma2(t))};
}

// Ancestral step t -> t-1. Noise is drawn only when t > 1.
inline LatentSample reverse_step(const LatentSample& x_t, const Planes& x0_est, int t, const NoiseSchedule& s,
                                 Rng& rng) {
    require(t >= 1, ErrorCode::range, "reverse step needs t >= 1, got " + std::to_string(t));
    require_same_shape(x_t, x0_est, "reverse_step");
    const PosteriorCoefficients c = posterior_coefficients(t, s);
    LatentSample out = like(x_t, 0.0, t - 1);
    auto o = out.values();
    auto x = x_t.values(), e = x0_est.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = c.x0 * e[i] + c.xt * x[i];
    if (t > 1) {
        std::normal_distribution<double> normal;
        for (double& v : o) v += c.sigma * normal(rng);
    }
    return out;
}

}  // namespace steerkit
