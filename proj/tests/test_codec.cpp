#include <gtest/gtest.h>

#include "helpers.hpp"

namespace sk = steerkit;
using sk::testing::error_code_of;
using sk::testing::max_abs_diff;

namespace {

sk::DepthMap ramp(int rows, int cols, double a, double b, double c) {
    sk::DepthMap d(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int q = 0; q < cols; ++q) d(r, q) = a * r + b * q + c;
    return d;
}

}  // namespace

TEST(IdentityCodec, EncodeDepthReplicatesChannels) {
    const sk::IdentityCodec codec;
    const auto d = ramp(5, 6, 0.3, -0.2, 1.0);
    const auto x = sk::encode_depth(d, codec);
    ASSERT_EQ(x.channels(), 3);
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 5; ++r)
            for (int q = 0; q < 6; ++q) EXPECT_EQ(x(c, r, q), d(r, q));
}

TEST(IdentityCodec, DecodeAveragesChannels) {
    const sk::IdentityCodec codec;
    sk::Planes x(3, 1, 2);
    x(0, 0, 0) = 1.0, x(1, 0, 0) = 2.0, x(2, 0, 0) = 6.0;
    x(0, 0, 1) = 0.1, x(1, 0, 1) = 0.2, x(2, 0, 1) = 0.4;
    const auto d = sk::decode_depth(x, codec);
    EXPECT_DOUBLE_EQ(d(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(d(0, 1), (0.1 + 0.2 + 0.4) / 3.0);
}

TEST(IdentityCodec, RoundTripIsExact) {
    const sk::IdentityCodec codec;
    sk::Rng rng(1);
    sk::DepthMap d(7, 9);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (double& v : d.values()) v = u(rng);
    EXPECT_EQ(sk::decode_depth(sk::encode_depth(d, codec), codec), static_cast<const sk::Grid<double>&>(d));
}

TEST(IdentityCodec, IsLinear) {
    const sk::IdentityCodec codec;
    sk::Rng rng(2);
    const auto x = sk::testing::random_planes(3, 4, 4, rng);
    sk::Planes ax = x;
    for (double& v : ax.values()) v *= 2.5;
    auto ex = codec.encode(x);
    for (double& v : ex.values()) v *= 2.5;
    EXPECT_EQ(codec.encode(ax), ex);
}

TEST(PoolingCodec, Shapes) {
    const sk::PoolingCodec codec(8);
    const auto x = sk::encode_depth(sk::DepthMap(448, 608, 1.0), codec);
    EXPECT_EQ(x.channels(), 4);
    EXPECT_EQ(x.rows(), 56);
    EXPECT_EQ(x.cols(), 76);
    EXPECT_EQ(codec.decode(x).dims(), (sk::Dims{448, 608}));
    EXPECT_EQ(error_code_of([&] { sk::encode_depth(sk::DepthMap(450, 608), codec); }), sk::ErrorCode::dimension);
    EXPECT_EQ(error_code_of([&] { sk::decode_depth(sk::Planes(3, 4, 4), codec); }), sk::ErrorCode::dimension);
}

TEST(PoolingCodec, ConstantPreserved) {
    for (auto name : {"identity", "pool4", "pool8"}) {
        const auto codec = sk::make_codec(name);
        const auto back = sk::decode_depth(sk::encode_depth(sk::DepthMap(64, 96, 2.0), *codec), *codec);
        for (double v : back.values()) EXPECT_NEAR(v, 2.0, 2.0 * codec->tolerance() + 1e-12) << name;
    }
}

TEST(PoolingCodec, RampRoundTripWithinTolerance) {
    const sk::PoolingCodec codec(8);
    const auto d = ramp(96, 128, 0.01, 0.02, 1.0);
    const auto back = sk::decode_depth(sk::encode_depth(d, codec), codec);
    double lo = 1e300, hi = -1e300;
    for (double v : d.values()) lo = std::min(lo, v), hi = std::max(hi, v);
    EXPECT_LT(max_abs_diff(back, d), codec.tolerance() * (hi - lo));
}

TEST(PoolingCodec, GradientChannel) {
    const sk::PoolingCodec codec(4);
    const auto x = sk::encode_depth(ramp(8, 16, 0.0, 0.5, 0.0), codec);
    // pooled mean rises by 4 * 0.5 per latent column
    for (int r = 0; r < x.rows(); ++r)
        for (int q = 0; q < x.cols(); ++q) EXPECT_NEAR(x(3, r, q), 2.0, 1e-12);
}

TEST(Codec, Factory) {
    EXPECT_EQ(sk::make_codec("identity")->name(), "identity");
    EXPECT_EQ(sk::make_codec("pool8")->scale_factor(), 8);
    EXPECT_EQ(sk::make_codec("pool")->scale_factor(), 8);
    EXPECT_EQ(error_code_of([] { sk::make_codec("vae"); }), sk::ErrorCode::parameter);
    EXPECT_EQ(error_code_of([] { sk::make_codec("poolx"); }), sk::ErrorCode::parameter);
    EXPECT_EQ(error_code_of([] { sk::make_codec("pool0"); }), sk::ErrorCode::parameter);
}
