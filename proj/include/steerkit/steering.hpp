#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steerkit/alignment.hpp"
#include "steerkit/codec.hpp"
#include "steerkit/ddpm.hpp"
#include "steerkit/denoisers.hpp"
#include "steerkit/geometry.hpp"

namespace steerkit {

struct SteeringConfig {
    double k = 0.3;
    double zeta = 7.0;
    double fill_density = 1.0;
    int steps = 50;
    std::uint64_t seed = 0;
    bool refit_per_step = true;
    bool resample_positions_per_step = false;
    ConditionFit condition_fit = ConditionFit::inverse;

    void validate() const {
        require(std::isfinite(k) && k >= 0.0, ErrorCode::parameter, "k must be >= 0");
        require(std::isfinite(zeta) && zeta > 0.0, ErrorCode::parameter, "zeta must be > 0");
        require(std::isfinite(fill_density) && fill_density >= 0.0, ErrorCode::parameter,
                "fill density must be >= 0");
        require(steps >= 1, ErrorCode::parameter, "steps must be >= 1");
    }
};

inline double lambda_at(double k, int t, const NoiseSchedule& s) {
    require_step(s, t);
    return k * std::sqrt(1.0 - s.alpha_bar(t));
}

// x_prev + lambda * (E(x0_dec - phi1 + phi2) - x0_est). condition_values are
// the condition already mapped into x0_dec's scale, in P's condition order.
inline LatentSample steer_step(const LatentSample& x_prev, const Planes& x0_est, const Grid<double>& x0_dec,
                               std::span<const double> condition_values, const SamplingPositions& P, double lambda,
                               const LatentCodec& codec, const ScatteredInterpolator& interp) {
    if (lambda == 0.0) return x_prev;
    require(P.size() > 0, ErrorCode::empty_condition, "steering with no positions");
    require_same_shape(x_prev, x0_est, "steer_step");
    // phi2 - phi1 is the interpolant of the condition residual, zero at fill positions
    std::vector<double> residual(P.size(), 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < P.size(); ++i)
        if (P.origin[i] == Origin::condition) {
            require(k < condition_values.size(), ErrorCode::dimension, "too few condition values");
            const Pixel p = P.positions[i];
            residual[i] = condition_values[k++] - x0_dec(p.row, p.col);
        }
    require(k == condition_values.size(), ErrorCode::dimension, "too many condition values");
    Grid<double> target = interp(residual);
    auto tv = target.values();
    auto dv = x0_dec.values();
    for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += dv[i];

    const LatentSample enc = encode_depth(target, codec);
    require_same_shape(enc, x0_est, "steering target");
    LatentSample out = x_prev;
    auto o = out.values();
    auto e = enc.values(), x0 = x0_est.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += lambda * (e[i] - x0[i]);
    require(all_finite(o), ErrorCode::numeric, "steering produced non-finite values");
    return out;
}

inline LatentSample steer_step(const LatentSample& x_prev, const Planes& x0_est, const Grid<double>& x0_dec,
                               std::span<const double> condition_values, const SamplingPositions& P, double lambda,
                               const LatentCodec& codec) {
    if (lambda == 0.0) return x_prev;
    require(P.size() > 0, ErrorCode::empty_condition, "steering with no positions");
    return steer_step(x_prev, x0_est, x0_dec, condition_values, P, lambda, codec,
                      ScatteredInterpolator(P.dims, P.positions));
}

struct CompletionResult {
    DepthMap depth;           // metric
    DepthMap relative;        // decoded final sample before the metric fit
    AffineDepthTransform fit;
    std::size_t positions = 0;  // |P| of the last steering step, 0 when unsteered
};

// Independent streams so that the noise sequence does not depend on k or on
// how many fill positions were drawn.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

inline CompletionResult complete(const Planes& rgb, const SparseDepth& c, const SteeringConfig& config,
                                 Denoiser& denoiser, const LatentCodec& codec, const NoiseSchedule& sched) {
    config.validate();
    require(c.size() >= 2, ErrorCode::insufficient_data, "completion needs at least 2 condition points");
    require(config.steps == sched.steps(), ErrorCode::parameter,
            "config has " + std::to_string(config.steps) + " steps, schedule " + std::to_string(sched.steps()));
    const Dims ld = codec.latent_dims(c.dims());
    Planes rgb_latent;
    if (rgb.size() > 0) {
        require(rgb.dims() == c.dims(), ErrorCode::dimension,
                "image " + to_string(rgb.dims()) + " vs condition " + to_string(c.dims()));
        rgb_latent = codec.encode(rgb);
    } else {
        rgb_latent = Planes(codec.latent_channels(), ld.rows, ld.cols);
    }

    Rng noise = make_stream(config.seed, 0);
    Rng placement = make_stream(config.seed, 1);
    const int T = sched.steps();

    std::optional<SamplingPositions> P;
    std::optional<ScatteredInterpolator> interp;
    std::vector<double> aligned;
    CompletionResult result;

    LatentSample x = standard_normal(codec.latent_channels(), ld.rows, ld.cols, noise, T);
    for (int t = T; t >= 1; --t) {
        LatentSample pred;
        try {
            pred = denoiser.predict(x, t, rgb_latent);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            fail(ErrorCode::denoiser, e.what());
        }
        require_same_shape(pred, x, "denoiser output");
        require(all_finite(pred.values()), ErrorCode::denoiser, "denoiser returned non-finite values at t=" +
                                                                    std::to_string(t));
        const LatentSample x0 = clean_estimate(denoiser.kind(), x, pred, t, sched);
        LatentSample next = reverse_step(x, x0, t, sched, noise);

        const double lambda = lambda_at(config.k, t, sched);
        if (lambda > 0.0) {
            const DepthMap dec = decode_depth(x0, codec);
            if (!P || config.resample_positions_per_step) {
                P = select_positions(c, config.zeta, config.fill_density, placement);
                interp.emplace(P->dims, P->positions);
                result.positions = P->size();
            }
            if (aligned.empty() || config.refit_per_step) aligned = align_condition(c, dec, config.condition_fit);
            next = steer_step(next, x0, dec, aligned, *P, lambda, codec, *interp);
        }
        x = std::move(next);
    }

    result.relative = decode_depth(x, codec);
    result.depth = align(result.relative, c, &result.fit);
    return result;
}

}  // namespace steerkit
