#pragma once

#include <memory>
#include <string>

#include "steerkit/ddpm.hpp"
#include "steerkit/grid.hpp"

namespace steerkit {

// Maps 3-channel pixel-space images to latents and back.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;

    virtual LatentSample encode(const Planes& image) const = 0;
    virtual Planes decode(const Planes& latent) const = 0;
    virtual int scale_factor() const = 0;
    virtual int latent_channels() const = 0;
    // Relative round-trip error the codec promises on smooth inputs.
    virtual double tolerance() const = 0;
    virtual std::string name() const = 0;

    Dims latent_dims(Dims image) const {
        const int f = scale_factor();
        require(image.rows % f == 0 && image.cols % f == 0, ErrorCode::dimension,
                "image " + to_string(image) + " not divisible by codec factor " + std::to_string(f));
        return {image.rows / f, image.cols / f};
    }
};

class IdentityCodec final : public LatentCodec {
public:
    LatentSample encode(const Planes& image) const override {
        require(image.channels() == 3, ErrorCode::dimension, "identity codec expects 3 channels");
        return LatentSample(image, 0);
    }
    Planes decode(const Planes& latent) const override {
        require(latent.channels() == 3, ErrorCode::dimension, "identity codec expects 3 latent channels");
        return latent;
    }
    int scale_factor() const override { return 1; }
    int latent_channels() const override { return 3; }
    double tolerance() const override { return 0.0; }
    std::string name() const override { return "identity"; }
};

// Average-pools each channel by `factor`; a fourth channel carries the
// horizontal gradient of the pooled channel mean. Decoding upsamples the
// pooled channels bilinearly, extrapolating linearly past the outermost
// cell centers, so affine ramps survive the round trip.
class PoolingCodec final : public LatentCodec {
public:
    explicit PoolingCodec(int factor = 8) : factor_(factor) {
        require(factor >= 1, ErrorCode::parameter, "pooling factor must be positive");
    }

    LatentSample encode(const Planes& image) const override {
        require(image.channels() == 3, ErrorCode::dimension, "pooling codec expects 3 channels");
        const Dims ld = latent_dims(image.dims());
        LatentSample out(4, ld.rows, ld.cols);
        const double inv = 1.0 / (factor_ * factor_);
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < ld.rows; ++r)
                for (int q = 0; q < ld.cols; ++q) {
                    double sum = 0.0;
                    for (int dr = 0; dr < factor_; ++dr)
                        for (int dq = 0; dq < factor_; ++dq) sum += image(c, r * factor_ + dr, q * factor_ + dq);
                    out(c, r, q) = sum * inv;
                }
        for (int r = 0; r < ld.rows; ++r)
            for (int q = 0; q < ld.cols; ++q) {
                auto mean = [&](int qq) { return (out(0, r, qq) + out(1, r, qq) + out(2, r, qq)) / 3.0; };
                const int q0 = q > 0 ? q - 1 : q, q1 = q + 1 < ld.cols ? q + 1 : q;
                out(3, r, q) = q1 > q0 ? (mean(q1) - mean(q0)) / (q1 - q0) : 0.0;
            }
        return out;
    }

    Planes decode(const Planes& latent) const override {
        require(latent.channels() == 4, ErrorCode::dimension, "pooling codec expects 4 latent channels");
        const int lr = latent.rows(), lc = latent.cols();
        Planes out(3, lr * factor_, lc * factor_);
        auto axis = [this](int i, int n, int& i0, double& w) {
            // position in latent-cell units, cell centers at integers
            const double p = (i + 0.5) / factor_ - 0.5;
            if (n == 1) {
                i0 = 0;
                w = 0.0;
                return;
            }
            i0 = static_cast<int>(std::floor(p));
            if (i0 < 0) i0 = 0;
            if (i0 > n - 2) i0 = n - 2;
            w = p - i0;
        };
        for (int r = 0; r < out.rows(); ++r) {
            int r0;
            double wr;
            axis(r, lr, r0, wr);
            const int r1 = lr == 1 ? 0 : r0 + 1;
            for (int q = 0; q < out.cols(); ++q) {
                int q0;
                double wq;
                axis(q, lc, q0, wq);
                const int q1 = lc == 1 ? 0 : q0 + 1;
                for (int c = 0; c < 3; ++c) {
                    const double top = (1 - wq) * latent(c, r0, q0) + wq * latent(c, r0, q1);
                    const double bot = (1 - wq) * latent(c, r1, q0) + wq * latent(c, r1, q1);
                    out(c, r, q) = (1 - wr) * top + wr * bot;
                }
            }
        }
        return out;
    }

    int scale_factor() const override { return factor_; }
    int latent_channels() const override { return 4; }
    double tolerance() const override { return 0.01; }
    std::string name() const override { return "pool" + std::to_string(factor_); }

private:
    int factor_;
};

inline std::unique_ptr<LatentCodec> make_codec(const std::string& name) {
    if (name == "identity") return std::make_unique<IdentityCodec>();
    if (name.rfind("pool", 0) == 0) {
        int f = 8;
        if (name.size() > 4) {
            try {
                f = std::stoi(name.substr(4));
            } catch (const std::exception&) {
                fail(ErrorCode::parameter, "bad pooling factor in '" + name + "'");
            }
        }
        return std::make_unique<PoolingCodec>(f);
    }
    fail(ErrorCode::parameter, "unknown codec '" + name + "'");
}

// Depth is replicated to three channels before encoding.
inline LatentSample encode_depth(const Grid<double>& d, const LatentCodec& codec) {
    codec.latent_dims(d.dims());
    Planes img(3, d.rows(), d.cols());
    for (int c = 0; c < 3; ++c) std::copy(d.values().begin(), d.values().end(), img.plane(c).begin());
    return codec.encode(img);
}

inline DepthMap decode_depth(const Planes& x, const LatentCodec& codec) {
    require(x.channels() == codec.latent_channels(), ErrorCode::dimension,
            "latent has " + std::to_string(x.channels()) + " channels, codec " + codec.name() + " expects " +
                std::to_string(codec.latent_channels()));
    const Planes img = codec.decode(x);
    require(img.channels() == 3, ErrorCode::dimension, "decoded image must have 3 channels");
    DepthMap out(img.rows(), img.cols());
    auto o = out.values();
    auto a = img.plane(0), b = img.plane(1), c = img.plane(2);
    // equal channels decode to that value exactly, (a + a + a) / 3 can be off by an ulp
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] = (a[i] == b[i] && b[i] == c[i]) ? a[i] : (a[i] + b[i] + c[i]) / 3.0;
    return out;
}

}  // namespace steerkit
