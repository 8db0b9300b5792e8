#include <gtest/gtest.h>

#include <cmath>

#include "echokit/fracfilter.hpp"
#include "echokit/metrics.hpp"
#include "echokit/synthetic.hpp"
#include "test_support.hpp"

using namespace echokit;

namespace {

double total_variation(const GrayImage& img) {
    double tv = 0.0;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            if (x + 1 < img.width()) tv += std::abs(img(x + 1, y) - img(x, y));
            if (y + 1 < img.height()) tv += std::abs(img(x, y + 1) - img(x, y));
        }
    }
    return tv;
}

}  // namespace

TEST(GlCoefficients, HandExamples) {
    EXPECT_EQ(gl_coefficients(1.0, 4), (std::vector<double>{1, 1, 1, 1}));
    const auto half = gl_coefficients(0.5, 3);
    EXPECT_DOUBLE_EQ(half[0], 1.0);
    EXPECT_DOUBLE_EQ(half[1], 0.5);
    EXPECT_DOUBLE_EQ(half[2], 0.375);
    for (double v : {0.1, 0.42, 0.9}) EXPECT_EQ(gl_coefficients(v, 1), std::vector<double>{1.0});
}

TEST(GlCoefficients, MatchGammaClosedForm) {
    for (double v : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto w = gl_coefficients(v, 33);
        for (int k = 0; k <= 32; ++k) {
            const double closed = std::exp(std::lgamma(k + v) - std::lgamma(v) - std::lgamma(k + 1.0));
            ASSERT_LE(std::abs(w[k] - closed) / closed, 1e-10) << "v=" << v << " k=" << k;
            ASSERT_GT(w[k], 0.0);
        }
    }
}

TEST(GlCoefficients, InvalidOrder) {
    EXPECT_THROW(gl_coefficients(0.0, 3), InvalidArgument);
    EXPECT_THROW(gl_coefficients(1.5, 3), InvalidArgument);
    EXPECT_THROW(gl_coefficients(0.5, 0), InvalidArgument);
}

TEST(Mask, OrderOneIsBoxFilter) {
    const auto m = build_mask({1.0, 3, kDefaultLogEps});
    for (double w : m.weights) EXPECT_NEAR(w, 1.0 / 9.0, 1e-15);
}

TEST(Mask, SumsToOneAndIsCentrallySymmetric) {
    for (double v : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
        for (int size : {3, 5}) {
            const auto m = build_mask({v, size, kDefaultLogEps});
            EXPECT_NEAR(m.sum(), 1.0, 1e-12);
            for (int r = 0; r < size; ++r) {
                for (int c = 0; c < size; ++c) {
                    EXPECT_EQ(m(c, r), m(size - 1 - c, size - 1 - r));
                }
            }
        }
    }
}

TEST(Mask, FiveByFiveRingsFollowCoefficients) {
    const auto m = build_mask({0.5, 5, kDefaultLogEps});
    const double center = m(2, 2);
    EXPECT_NEAR(m(3, 2) / center, 0.5, 1e-12);
    EXPECT_NEAR(m(4, 4) / center, 0.375, 1e-12);
    EXPECT_NEAR(m(0, 2) / center, 0.375, 1e-12);
    EXPECT_EQ(m(1, 0), 0.0);
    EXPECT_NEAR(center, 1.0 / (1.0 + 8 * 0.5 + 8 * 0.375), 1e-15);
}

TEST(Mask, InvalidParams) {
    EXPECT_THROW(build_mask({0.5, 4, kDefaultLogEps}), InvalidArgument);
    EXPECT_THROW(build_mask({0.0, 3, kDefaultLogEps}), InvalidArgument);
    EXPECT_THROW(build_mask({0.5, 3, 0.0}), InvalidArgument);
}

TEST(Denoise, ConstantImageIsFixedPoint) {
    for (double c : {0.0, 0.37, 1.0}) {
        const auto out = denoise(GrayImage::filled(12, 9, c), {0.5, 5, kDefaultLogEps});
        for (double v : out.values()) ASSERT_NEAR(v, c, 1e-9);
    }
}

TEST(Denoise, OutlierPulledToGeometricMean) {
    std::vector<double> v(25, 0.2);
    v[12] = 0.8;
    const auto out = denoise(GrayImage(5, 5, v), {1.0, 3, kDefaultLogEps});
    const double eps = kDefaultLogEps;
    const double expected = std::exp((8 * std::log(0.2 + eps) + std::log(0.8 + eps)) / 9.0) - eps;
    EXPECT_NEAR(out(2, 2), expected, 1e-12);
    EXPECT_LT(out(2, 2), 0.8);
}

TEST(Denoise, OutputStaysInUnitInterval) {
    const auto img = support::random_image(40, 30, 11);
    const auto out = denoise(img, {0.3, 5, kDefaultLogEps});
    for (double v : out.values()) {
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
}

TEST(Denoise, ImageSmallerThanMask) {
    EXPECT_THROW(denoise(GrayImage::filled(4, 4, 0.5), {0.5, 5, kDefaultLogEps}), InvalidArgument);
}

TEST(Denoise, ImprovesSpeckledCheckerboardAndReducesVariation) {
    const auto clean = generate_checkerboard(256, 256, 8, 0.4, 0.6);
    const auto noisy = apply_speckle(clean, {0.2, 7, 0.05});
    const auto out = denoise(noisy, {0.5, 3, kDefaultLogEps});
    EXPECT_GT(psnr_from_mse(mse(clean, out)), psnr_from_mse(mse(clean, noisy)));
    EXPECT_LE(total_variation(out), total_variation(noisy));
}
