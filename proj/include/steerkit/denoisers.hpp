#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "steerkit/ddpm.hpp"
#include "steerkit/error.hpp"
#include "steerkit/grid.hpp"

namespace steerkit {

enum class PredictionKind { eps, v };

inline std::string to_string(PredictionKind k) { return k == PredictionKind::eps ? "eps" : "v"; }

inline PredictionKind parse_prediction_kind(const std::string& s) {
    if (s == "eps") return PredictionKind::eps;
    if (s == "v") return PredictionKind::v;
    fail(ErrorCode::parameter, "unknown prediction kind '" + s + "' (eps|v)");
}

class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual PredictionKind kind() const = 0;
    // Prediction for x_t at step t; rgb_latent is the encoded image the model conditions on.
    virtual LatentSample predict(const LatentSample& x_t, int t, const Planes& rgb_latent) = 0;
};

// Runs a denoiser trained on a longer native schedule at subsampled steps.
class RemappedDenoiser final : public Denoiser {
public:
    RemappedDenoiser(Denoiser& inner, std::vector<int> native) : inner_(inner), native_(std::move(native)) {}
    PredictionKind kind() const override { return inner_.kind(); }
    LatentSample predict(const LatentSample& x_t, int t, const Planes& rgb_latent) override {
        require(t >= 1 && t < static_cast<int>(native_.size()), ErrorCode::range,
                "step " + std::to_string(t) + " has no native timestep");
        return LatentSample(inner_.predict(x_t, native_[t], rgb_latent), t);
    }

private:
    Denoiser& inner_;
    std::vector<int> native_;
};

inline LatentSample clean_estimate(PredictionKind kind, const LatentSample& x_t, const Planes& prediction, int t,
                                   const NoiseSchedule& s) {
    return kind == PredictionKind::eps ? clean_from_eps(x_t, prediction, t, s) : clean_from_v(x_t, prediction, t, s);
}

// The prediction an exact model would make if the clean sample were x0.
inline LatentSample oracle_predict(const Planes& x_t, int t, const Planes& x0, const NoiseSchedule& s,
                                   PredictionKind kind) {
    require_same_shape(x_t, x0, "oracle_predict");
    require_step(s, t);
    const double ab = s.alpha_bar(t);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    require(b > 0.0, ErrorCode::singularity, "alpha_bar is 1 at t=" + std::to_string(t));
    LatentSample out = like(x_t, 0.0, t);
    auto o = out.values();
    auto x = x_t.values(), c = x0.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double eps = (x[i] - a * c[i]) / b;
        o[i] = kind == PredictionKind::eps ? eps : a * eps - b * c[i];
    }
    return out;
}

class OracleDenoiser final : public Denoiser {
public:
    OracleDenoiser(Planes x0, NoiseSchedule sched, PredictionKind kind = PredictionKind::v)
        : x0_(std::move(x0)), sched_(std::move(sched)), kind_(kind) {}

    PredictionKind kind() const override { return kind_; }
    LatentSample predict(const LatentSample& x_t, int t, const Planes&) override {
        return oracle_predict(x_t, t, x0_, sched_, kind_);
    }

private:
    Planes x0_;
    NoiseSchedule sched_;
    PredictionKind kind_;
};

// Systematic error injected into the oracle's clean sample.
struct BiasSpec {
    enum class Kind { none, blur, affine, plane };
    Kind kind = Kind::none;
    double sigma = 0.0;  // blur, in latent pixels
    double scale = 1.0;  // affine
    double shift = 0.0;

    static BiasSpec blur(double sigma) { return {Kind::blur, sigma, 1.0, 0.0}; }
    static BiasSpec affine(double s, double b) { return {Kind::affine, 0.0, s, b}; }
    static BiasSpec plane() { return {Kind::plane, 0.0, 1.0, 0.0}; }

    void validate() const {
        require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::parameter, "blur sigma must be >= 0");
        require(std::isfinite(scale) && std::isfinite(shift), ErrorCode::parameter, "affine bias must be finite");
        require(kind != Kind::affine || scale != 0.0, ErrorCode::parameter, "affine bias scale must be nonzero");
    }
};

inline std::string to_string(const BiasSpec& b) {
    std::ostringstream os;
    switch (b.kind) {
        case BiasSpec::Kind::none: os << "none"; break;
        case BiasSpec::Kind::blur: os << "blur:" << b.sigma; break;
        case BiasSpec::Kind::affine: os << "affine:" << b.scale << "," << b.shift; break;
        case BiasSpec::Kind::plane: os << "plane"; break;
    }
    return os.str();
}

// none | blur:<sigma> | affine:<scale>,<shift> | plane
inline BiasSpec parse_bias(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto number = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        fail(ErrorCode::parameter, "bad number '" + s + "' in bias '" + text + "'");
    };
    BiasSpec out;
    if (head == "none" && args.empty()) {
        out.kind = BiasSpec::Kind::none;
    } else if (head == "blur") {
        out = BiasSpec::blur(number(args));
    } else if (head == "affine") {
        const auto comma = args.find(',');
        require(comma != std::string::npos, ErrorCode::parameter, "affine bias needs <scale>,<shift>");
        out = BiasSpec::affine(number(args.substr(0, comma)), number(args.substr(comma + 1)));
    } else if (head == "plane" && args.empty()) {
        out = BiasSpec::plane();
    } else {
        fail(ErrorCode::parameter, "unknown bias '" + text + "'");
    }
    out.validate();
    return out;
}

namespace detail {

inline void gaussian_blur_plane(std::span<double> p, int rows, int cols, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= sum;
    // reflect about the edge pixel centers
    auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        const int period = 2 * (n - 1);
        i %= period;
        if (i < 0) i += period;
        return i < n ? i : period - i;
    };
    std::vector<double> line(std::max(rows, cols)), out(std::max(rows, cols));
    for (int r = 0; r < rows; ++r) {
        double* row = p.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j) acc += k[j + radius] * row[reflect(c + j, cols)];
            out[c] = acc;
        }
        std::copy(out.begin(), out.begin() + cols, row);
    }
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) line[r] = p[static_cast<std::size_t>(r) * cols + c];
        for (int r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j) acc += k[j + radius] * line[reflect(r + j, rows)];
            p[static_cast<std::size_t>(r) * cols + c] = acc;
        }
    }
}

inline void plane_fit_plane(std::span<double> p, int rows, int cols) {
    // least squares v ~ a*r + b*c + d; r and c are centered, so the normal matrix is diagonal
    const double mr = (rows - 1) / 2.0, mc = (cols - 1) / 2.0;
    double mean = 0.0, sr = 0.0, sc = 0.0, rr = 0.0, cc = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = p[static_cast<std::size_t>(r) * cols + c];
            mean += v;
            sr += (r - mr) * v;
            sc += (c - mc) * v;
            rr += (r - mr) * (r - mr);
            cc += (c - mc) * (c - mc);
        }
    mean /= static_cast<double>(rows) * cols;
    const double a = rr > 0 ? sr / rr : 0.0, b = cc > 0 ? sc / cc : 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) p[static_cast<std::size_t>(r) * cols + c] = mean + a * (r - mr) + b * (c - mc);
}

}  // namespace detail

inline Planes apply_bias(const Planes& x0, const BiasSpec& bias) {
    bias.validate();
    Planes out = x0;
    for (int c = 0; c < out.channels(); ++c) {
        auto p = out.plane(c);
        switch (bias.kind) {
            case BiasSpec::Kind::none: break;
            case BiasSpec::Kind::blur: detail::gaussian_blur_plane(p, out.rows(), out.cols(), bias.sigma); break;
            case BiasSpec::Kind::affine:
                for (double& v : p) v = bias.scale * v + bias.shift;
                break;
            case BiasSpec::Kind::plane: detail::plane_fit_plane(p, out.rows(), out.cols()); break;
        }
    }
    return out;
}

// Gaussian prior on the deviation of the clean sample from the biased mean,
// diagonal in the 2D DCT-II basis. The spectrum is a band-pass
// exp(-pi^2 l^2 f^2 / 2) * (1 - exp(-pi^2 L^2 f^2 / 2)), f^2 = (ky/H)^2 + (kx/W)^2,
// scaled so the per-pixel standard deviation is `sigma`. sigma = 0 gives a
// denoiser that returns the biased mean regardless of x_t. band = 0 drops the
// high-pass factor.
struct PriorSpec {
    double sigma = 0.1;
    double ell = 8.0;
    double band = 64.0;

    void validate() const {
        require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::parameter, "prior sigma must be >= 0");
        require(std::isfinite(ell) && ell >= 0.0, ErrorCode::parameter, "prior length must be >= 0");
        require(std::isfinite(band) && band >= 0.0, ErrorCode::parameter, "prior band must be >= 0");
    }
};

inline std::string to_string(const PriorSpec& p) {
    std::ostringstream os;
    os << p.sigma << "," << p.ell << "," << p.band;
    return os.str();
}

// <sigma>[,<ell>[,<band>]] or "none"
inline PriorSpec parse_prior(const std::string& text) {
    if (text == "none") return {0.0, 0.0, 0.0};
    PriorSpec out;
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            require(used == item.size(), ErrorCode::parameter, "trailing characters");
        } catch (const std::exception&) {
            fail(ErrorCode::parameter, "bad prior '" + text + "'");
        }
    }
    require(!v.empty() && v.size() <= 3, ErrorCode::parameter, "prior takes 1 to 3 numbers");
    out.sigma = v[0];
    if (v.size() > 1) out.ell = v[1];
    if (v.size() > 2) out.band = v[2];
    out.validate();
    return out;
}

// Posterior-mean denoiser under x0 ~ N(m, C), C diagonal in the DCT basis.
// Per coefficient: E[x0 | x_t] = m + g (x_t - sqrt(ab) m), g = sqrt(ab) S / (ab S + 1 - ab).
class BiasedOracleDenoiser final : public Denoiser {
public:
    BiasedOracleDenoiser(const Planes& x0, const BiasSpec& bias, const PriorSpec& prior, NoiseSchedule sched,
                         PredictionKind kind = PredictionKind::v)
        : mean_(apply_bias(x0, bias)), prior_(prior), sched_(std::move(sched)), kind_(kind) {
        prior_.validate();
        rows_ = mean_.rows();
        cols_ = mean_.cols();
        if (prior_.sigma > 0.0 && rows_ > 0 && cols_ > 0) build_spectrum();
    }

    ~BiasedOracleDenoiser() override {
        std::lock_guard lock(planner_mutex());
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
        if (buf_) fftw_free(buf_);
    }
    BiasedOracleDenoiser(const BiasedOracleDenoiser&) = delete;
    BiasedOracleDenoiser& operator=(const BiasedOracleDenoiser&) = delete;

    PredictionKind kind() const override { return kind_; }
    const Planes& biased_mean() const noexcept { return mean_; }

    Planes clean_sample(const LatentSample& x_t, int t) {
        require_same_shape(x_t, mean_, "biased oracle");
        Planes x0 = mean_;
        if (spectrum_.empty()) return x0;
        const double ab = sched_.alpha_bar(t), sa = std::sqrt(ab);
        const std::size_t n = mean_.plane_size();
        std::vector<double> gain(n);
        const double norm = 1.0 / (4.0 * n);
        for (std::size_t i = 0; i < n; ++i) gain[i] = sa * spectrum_[i] / (ab * spectrum_[i] + 1.0 - ab) * norm;
        for (int c = 0; c < mean_.channels(); ++c) {
            auto m = mean_.plane(c);
            auto x = x_t.plane(c);
            for (std::size_t i = 0; i < n; ++i) buf_[i] = x[i] - sa * m[i];
            fftw_execute(forward_);
            for (std::size_t i = 0; i < n; ++i) buf_[i] *= gain[i];
            fftw_execute(backward_);
            auto o = x0.plane(c);
            for (std::size_t i = 0; i < n; ++i) o[i] += buf_[i];
        }
        return x0;
    }

    LatentSample predict(const LatentSample& x_t, int t, const Planes&) override {
        return oracle_predict(x_t, t, clean_sample(x_t, t), sched_, kind_);
    }

private:
    // the FFTW planner is not reentrant
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    void build_spectrum() {
        const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
        spectrum_.assign(n, 0.0);
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double total = 0.0;
        for (int ky = 0; ky < rows_; ++ky)
            for (int kx = 0; kx < cols_; ++kx) {
                const double f2 = double(ky) * ky / (double(rows_) * rows_) + double(kx) * kx / (double(cols_) * cols_);
                double s = std::exp(-pi2 * prior_.ell * prior_.ell * f2 / 2.0);
                if (prior_.band > 0.0) s *= 1.0 - std::exp(-pi2 * prior_.band * prior_.band * f2 / 2.0);
                spectrum_[static_cast<std::size_t>(ky) * cols_ + kx] = s;
                total += s;
            }
        require(total > 0.0, ErrorCode::parameter, "prior spectrum is empty for these dims");
        // orthonormal coefficients: per-pixel variance = sum(S) / n
        const double scale = prior_.sigma * prior_.sigma * n / total;
        for (double& s : spectrum_) s *= scale;

        std::lock_guard lock(planner_mutex());
        buf_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
        // unnormalized DCT-II then DCT-III; the pair scales by 4 * rows * cols
        forward_ = fftw_plan_r2r_2d(rows_, cols_, buf_, buf_, FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
        backward_ = fftw_plan_r2r_2d(rows_, cols_, buf_, buf_, FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
        require(forward_ && backward_, ErrorCode::numeric, "could not plan DCT");
    }

    Planes mean_;
    PriorSpec prior_;
    NoiseSchedule sched_;
    PredictionKind kind_;
    int rows_ = 0, cols_ = 0;
    std::vector<double> spectrum_;
    double* buf_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

}  // namespace steerkit
