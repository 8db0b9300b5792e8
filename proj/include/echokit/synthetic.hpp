#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/image.hpp"
#include "echokit/noise.hpp"

namespace echokit {

/// Pixel (x,y) is `hi` when (x/tile + y/tile) is even, `lo` otherwise.
inline GrayImage generate_checkerboard(int width, int height, int tile, double lo, double hi) {
    detail::require(width >= 1 && height >= 1, "checkerboard dimensions must be positive");
    detail::require(tile >= 1, "checkerboard tile must be >= 1");
    detail::require(0.0 <= lo && lo < hi && hi <= 1.0, "checkerboard needs 0 <= lo < hi <= 1");
    std::vector<double> data(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const bool even = ((x / tile) + (y / tile)) % 2 == 0;
            data[static_cast<std::size_t>(y) * width + x] = even ? hi : lo;
        }
    }
    return GrayImage(width, height, std::move(data));
}

/// Ground-truth labels of a checkerboard: 1 on `hi` tiles, 0 on `lo` tiles.
inline LabelMask checkerboard_labels(int width, int height, int tile) {
    LabelMask mask(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            mask.set(x, y, ((x / tile) + (y / tile)) % 2 == 0 ? 1 : 0);
        }
    }
    return mask;
}

enum PhantomClass : int { kBackground = 0, kWall = 1, kChamber = 2 };

/**
 * Echo-like test scene: an elliptical bright wall ring around a dark
 * chamber on a mid-gray background, textured with multiplicative speckle.
 *
 * The ring's outer ellipse has semi-axes (axis_x, axis_y); the chamber is
 * the concentric ellipse shrunk by `wall_thickness` on both axes.
 */
struct PhantomSpec {
    int width = 128;
    int height = 128;
    double center_x = 64.0;
    double center_y = 64.0;
    double axis_x = 44.0;
    double axis_y = 36.0;
    double wall_thickness = 14.0;
    double background = 0.5;
    double wall = 0.8;
    double chamber = 0.2;
    /// Speckle strength of the texture; 0 gives flat regions.
    double texture = 0.35;
    std::uint64_t seed = 2024;

    std::array<double, 3> intensities() const { return {background, wall, chamber}; }

    void validate() const {
        detail::require(width >= 1 && height >= 1, "phantom dimensions must be positive");
        detail::require(wall_thickness > 0.0, "phantom wall thickness must be positive");
        detail::require(axis_x > wall_thickness && axis_y > wall_thickness,
                        "phantom axes must exceed the wall thickness");
        detail::require(center_x - axis_x >= 0.0 && center_x + axis_x <= width - 1.0 &&
                            center_y - axis_y >= 0.0 && center_y + axis_y <= height - 1.0,
                        "phantom ring does not fit inside the image");
        const auto levels = intensities();
        for (std::size_t i = 0; i < levels.size(); ++i) {
            detail::require(levels[i] >= 0.0 && levels[i] <= 1.0,
                            "phantom intensities must be in [0,1]");
            for (std::size_t j = i + 1; j < levels.size(); ++j) {
                detail::require(std::abs(levels[i] - levels[j]) >= 0.1 - 1e-12,
                                "phantom class intensities must differ by at least 0.1");
            }
        }
        detail::require(texture >= 0.0, "phantom texture must be >= 0");
    }
};

struct Phantom {
    GrayImage image;
    LabelMask mask;
};

inline Phantom generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const double inner_x = spec.axis_x - spec.wall_thickness;
    const double inner_y = spec.axis_y - spec.wall_thickness;
    const auto levels = spec.intensities();

    LabelMask mask(spec.width, spec.height);
    std::vector<double> clean(static_cast<std::size_t>(spec.width) * spec.height);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double dx = x - spec.center_x;
            const double dy = y - spec.center_y;
            const double outer = (dx * dx) / (spec.axis_x * spec.axis_x) +
                                 (dy * dy) / (spec.axis_y * spec.axis_y);
            const double inner = (dx * dx) / (inner_x * inner_x) + (dy * dy) / (inner_y * inner_y);
            int label = kBackground;
            if (inner <= 1.0) {
                label = kChamber;
            } else if (outer <= 1.0) {
                label = kWall;
            }
            mask.set(x, y, label);
            clean[static_cast<std::size_t>(y) * spec.width + x] = levels[static_cast<std::size_t>(label)];
        }
    }

    GrayImage image(spec.width, spec.height, std::move(clean));
    image = apply_speckle(image, SpeckleParams{spec.texture, spec.seed, 0.05});
    return Phantom{std::move(image), std::move(mask)};
}

}  // namespace echokit
