#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "echokit/error.hpp"

namespace echokit {

/**
 * Row-major 2-D array. Index (x, y) is column x, row y.
 *
 * Grid carries no value constraints; the image types below wrap it and
 * enforce theirs at construction.
 */
template <typename T>
class Grid {
public:
    Grid() = default;

    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(checked_area(width, height), fill) {}

    Grid(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        detail::require(data_.size() == checked_area(width, height),
                        "grid data length does not match width x height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }

    /// Edge-replicated access: coordinates outside the grid clamp to the border.
    const T& clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    const std::vector<T>& vector() const { return data_; }

    bool operator==(const Grid&) const = default;

private:
    static std::size_t checked_area(int width, int height) {
        detail::require(width >= 1 && height >= 1, "image dimensions must be at least 1x1");
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// Unconstrained real field, e.g. a log-domain image.
using RealField = Grid<double>;

/// Intensities in [0,1]. Immutable once built.
class GrayImage {
public:
    GrayImage(int width, int height, std::vector<double> data)
        : grid_(width, height, std::move(data)) {
        for (double v : grid_.values()) {
            detail::require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                            "gray image intensities must be finite and in [0,1]");
        }
    }

    explicit GrayImage(RealField field) : GrayImage(field.width(), field.height(), field.vector()) {}

    static GrayImage filled(int width, int height, double value) {
        return GrayImage(width, height,
                         std::vector<double>(static_cast<std::size_t>(width) * height, value));
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    std::size_t size() const { return grid_.size(); }
    double operator()(int x, int y) const { return grid_(x, y); }
    double clamped(int x, int y) const { return grid_.clamped(x, y); }
    std::span<const double> values() const { return grid_.values(); }
    const RealField& field() const { return grid_; }

    bool operator==(const GrayImage&) const = default;

private:
    RealField grid_;
};

/// Gray levels in {0, ..., levels-1}.
class QuantizedImage {
public:
    QuantizedImage(int width, int height, int levels, std::vector<std::uint16_t> data)
        : levels_(levels), grid_(width, height, std::move(data)) {
        detail::require(levels >= 2 && levels <= 256, "quantization levels must be in [2,256]");
        for (auto v : grid_.values()) {
            detail::require(v < levels, "quantized value out of range");
        }
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    int levels() const { return levels_; }
    int operator()(int x, int y) const { return grid_(x, y); }
    int clamped(int x, int y) const { return grid_.clamped(x, y); }
    std::span<const std::uint16_t> values() const { return grid_.values(); }

private:
    int levels_;
    Grid<std::uint16_t> grid_;
};

/// Per-pixel class ids (non-negative). Ground-truth masks use ids 0..K-1.
class LabelMask {
public:
    LabelMask(int width, int height, int fill = 0) : grid_(width, height, fill) {
        detail::require(fill >= 0, "class ids must be non-negative");
    }

    LabelMask(int width, int height, std::vector<int> labels)
        : grid_(width, height, std::move(labels)) {
        for (int v : grid_.values()) {
            detail::require(v >= 0, "class ids must be non-negative");
        }
    }

    int width() const { return grid_.width(); }
    int height() const { return grid_.height(); }
    std::size_t size() const { return grid_.size(); }
    int operator()(int x, int y) const { return grid_(x, y); }
    void set(int x, int y, int label) {
        detail::require(label >= 0, "class ids must be non-negative");
        grid_(x, y) = label;
    }
    bool contains(int x, int y) const { return grid_.contains(x, y); }
    std::span<const int> values() const { return grid_.values(); }

    /// One past the largest id present.
    int class_count() const {
        int top = -1;
        for (int v : grid_.values()) top = std::max(top, v);
        return top + 1;
    }

    std::vector<std::size_t> class_histogram() const {
        std::vector<std::size_t> counts(static_cast<std::size_t>(class_count()), 0);
        for (int v : grid_.values()) ++counts[static_cast<std::size_t>(v)];
        return counts;
    }

    bool operator==(const LabelMask&) const = default;

private:
    Grid<int> grid_;
};

/// level = min(floor(v * levels), levels - 1)
inline int quantize_value(double intensity, int levels) {
    const auto level = static_cast<int>(std::floor(intensity * levels));
    return std::clamp(level, 0, levels - 1);
}

inline QuantizedImage quantize(const GrayImage& img, int levels) {
    detail::require(levels >= 2 && levels <= 256, "quantization levels must be in [2,256]");
    std::vector<std::uint16_t> out(img.size());
    auto src = img.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint16_t>(quantize_value(src[i], levels));
    }
    return QuantizedImage(img.width(), img.height(), levels, std::move(out));
}

/// Snap every intensity to the nearest multiple of 1/255, the precision of
/// an 8-bit file. Applying it to a loaded image is the identity.
inline GrayImage to_8bit_grid(const GrayImage& img) {
    std::vector<double> out(img.size());
    auto src = img.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::round(src[i] * 255.0) / 255.0;
    }
    return GrayImage(img.width(), img.height(), std::move(out));
}

}  // namespace echokit
