#include <gtest/gtest.h>

#include "echokit/image.hpp"
#include "echokit/synthetic.hpp"
#include "test_support.hpp"

using namespace echokit;

TEST(GrayImage, RejectsOutOfRangeAndNonFinite) {
    EXPECT_THROW(GrayImage(1, 1, {1.5}), InvalidArgument);
    EXPECT_THROW(GrayImage(1, 1, {-0.1}), InvalidArgument);
    EXPECT_THROW(GrayImage(1, 1, {std::nan("")}), InvalidArgument);
    EXPECT_THROW(GrayImage(2, 2, {0.0, 0.0, 0.0}), InvalidArgument);
    EXPECT_THROW(GrayImage(0, 1, {}), InvalidArgument);
}

TEST(GrayImage, RowMajorAccess) {
    const GrayImage img(3, 2, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5});
    EXPECT_DOUBLE_EQ(img(2, 0), 0.2);
    EXPECT_DOUBLE_EQ(img(0, 1), 0.3);
    EXPECT_DOUBLE_EQ(img.clamped(-5, 9), 0.3);
    EXPECT_DOUBLE_EQ(img.clamped(7, -1), 0.2);
}

TEST(Quantize, HandExamples) {
    EXPECT_EQ(quantize_value(0.0, 16), 0);
    EXPECT_EQ(quantize_value(1.0, 16), 15);
    EXPECT_EQ(quantize_value(0.5, 16), 8);
}

TEST(Quantize, LevelsOutOfRange) {
    const auto img = GrayImage::filled(2, 2, 0.5);
    EXPECT_THROW(quantize(img, 1), InvalidArgument);
    EXPECT_THROW(quantize(img, 257), InvalidArgument);
}

TEST(Quantize, Monotone) {
    Rng rng(4);
    for (int levels : {2, 7, 16, 256}) {
        for (int i = 0; i < 2000; ++i) {
            double a = rng.uniform01(), b = rng.uniform01();
            if (a > b) std::swap(a, b);
            ASSERT_LE(quantize_value(a, levels), quantize_value(b, levels));
        }
    }
}

TEST(Checkerboard, HandExamples) {
    const auto tiny = generate_checkerboard(2, 2, 1, 0.0, 1.0);
    EXPECT_EQ(std::vector<double>(tiny.values().begin(), tiny.values().end()),
              (std::vector<double>{1, 0, 0, 1}));

    const auto blocks = generate_checkerboard(4, 4, 2, 0.25, 0.75);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            EXPECT_EQ(blocks(x, y), ((x / 2 + y / 2) % 2 == 0) ? 0.75 : 0.25);
        }
    }

    const auto bands = generate_checkerboard(6, 6, 6, 0.0, 1.0);
    for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) EXPECT_EQ(bands(x, y), 1.0);
    }
}

TEST(Checkerboard, RejectsBadArguments) {
    EXPECT_THROW(generate_checkerboard(0, 4, 1, 0, 1), InvalidArgument);
    EXPECT_THROW(generate_checkerboard(4, 4, 0, 0, 1), InvalidArgument);
    EXPECT_THROW(generate_checkerboard(4, 4, 1, 0.6, 0.4), InvalidArgument);
}

TEST(Phantom, ClassesPresentAndCenterIsChamber) {
    PhantomSpec spec;
    spec.wall = 0.8;
    spec.chamber = 0.2;
    spec.background = 0.5;
    const auto p = generate_phantom(spec);
    const auto hist = p.mask.class_histogram();
    ASSERT_EQ(hist.size(), 3u);
    for (auto c : hist) EXPECT_GT(c, 0u);
    EXPECT_EQ(p.mask(spec.center_x, spec.center_y), kChamber);
    EXPECT_EQ(p.mask(0, 0), kBackground);
}

TEST(Phantom, Deterministic) {
    PhantomSpec spec;
    const auto a = generate_phantom(spec);
    const auto b = generate_phantom(spec);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.mask, b.mask);
}

TEST(Phantom, FlatWhenTextureIsZero) {
    PhantomSpec spec;
    spec.texture = 0.0;
    const auto p = generate_phantom(spec);
    const double level[3] = {spec.background, spec.wall, spec.chamber};
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) ASSERT_EQ(p.image(x, y), level[p.mask(x, y)]);
    }
}

TEST(Phantom, ValidationErrors) {
    PhantomSpec ring_outside;
    ring_outside.axis_x = 100;
    EXPECT_THROW(generate_phantom(ring_outside), InvalidArgument);

    PhantomSpec too_close;
    too_close.wall = 0.55;
    EXPECT_THROW(generate_phantom(too_close), InvalidArgument);
}

TEST(EightBitGrid, SnapsAndIsIdempotent) {
    const auto img = support::random_image(16, 16, 8);
    const auto snapped = to_8bit_grid(img);
    for (std::size_t i = 0; i < img.size(); ++i) {
        EXPECT_LE(std::abs(snapped.values()[i] - img.values()[i]), 0.5 / 255.0 + 1e-15);
    }
    EXPECT_EQ(to_8bit_grid(snapped), snapped);
}

TEST(LabelMask, HistogramAndClassCount) {
    const LabelMask m(3, 1, std::vector<int>{0, 2, 2});
    EXPECT_EQ(m.class_count(), 3);
    EXPECT_EQ(m.class_histogram(), (std::vector<std::size_t>{1, 0, 2}));
    EXPECT_THROW(LabelMask(1, 1, std::vector<int>{-1}), InvalidArgument);
}
