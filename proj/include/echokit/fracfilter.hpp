#pragma once

// Fractional-order integral smoothing in the log domain.
//
// Grünwald-Letnikov weights of order v drive a square mask: the weight for
// lag k sits at Chebyshev distance k along the eight compass rays from the
// centre, and the mask is normalized to unit sum. Convolving log(f) with it
// averages the additive log-speckle term away; exp() maps back to intensity.

#include <cmath>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/image.hpp"
#include "echokit/noise.hpp"

namespace echokit {

struct FracParams {
    double order = 0.5;
    int mask_size = 3;
    double eps = kDefaultLogEps;

    void validate() const {
        detail::require(order > 0.0 && order <= 1.0, "fractional order must be in (0,1]");
        detail::require(mask_size == 3 || mask_size == 5, "fractional mask size must be 3 or 5");
        detail::require(eps > 0.0, "log-domain eps must be positive");
    }
};

/// Square convolution kernel, row-major.
struct Mask {
    int size = 0;
    std::vector<double> weights;

    double operator()(int col, int row) const {
        return weights[static_cast<std::size_t>(row) * size + col];
    }
    double sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// w0 = 1, wk = w(k-1) * (k - 1 + v) / k; equal to Gamma(k+v) / (Gamma(v) k!).
inline std::vector<double> gl_coefficients(double order, int count) {
    detail::require(order > 0.0 && order <= 1.0, "fractional order must be in (0,1]");
    detail::require(count >= 1, "coefficient count must be >= 1");
    std::vector<double> w(static_cast<std::size_t>(count));
    w[0] = 1.0;
    for (int k = 1; k < count; ++k) {
        w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k - 1)] * (k - 1 + order) / k;
    }
    return w;
}

inline Mask build_mask(const FracParams& params) {
    params.validate();
    const int size = params.mask_size;
    const int radius = (size - 1) / 2;
    const auto w = gl_coefficients(params.order, radius + 1);

    Mask mask{size, std::vector<double>(static_cast<std::size_t>(size) * size, 0.0)};
    auto at = [&](int dx, int dy) -> double& {
        return mask.weights[static_cast<std::size_t>(dy + radius) * size + (dx + radius)];
    };
    at(0, 0) = w[0];
    constexpr int kRays[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
    for (const auto& ray : kRays) {
        for (int k = 1; k <= radius; ++k) {
            at(ray[0] * k, ray[1] * k) = w[static_cast<std::size_t>(k)];
        }
    }
    const double total = mask.sum();
    for (double& v : mask.weights) v /= total;
    return mask;
}

/// 2-D correlation with edge-replicated borders. The mask is centrally
/// symmetric, so this is also its convolution.
inline RealField convolve_replicate(const RealField& field, const Mask& mask) {
    const int radius = mask.size / 2;
    RealField out(field.width(), field.height());
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            double acc = 0.0;
            for (int j = -radius; j <= radius; ++j) {
                for (int i = -radius; i <= radius; ++i) {
                    acc += mask(i + radius, j + radius) * field.clamped(x + i, y + j);
                }
            }
            out(x, y) = acc;
        }
    }
    return out;
}

inline GrayImage denoise(const GrayImage& img, const FracParams& params) {
    params.validate();
    detail::require(img.width() >= params.mask_size && img.height() >= params.mask_size,
                    "image is smaller than the fractional mask");
    const Mask mask = build_mask(params);
    return exp_transform(convolve_replicate(log_transform(img, params.eps), mask), params.eps);
}

}  // namespace echokit
