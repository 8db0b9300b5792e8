#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/image.hpp"
#include "echokit/random.hpp"

namespace echokit {

/// Offset added before taking logs so that black pixels stay finite.
inline constexpr double kDefaultLogEps = 1e-6;

struct SpeckleParams {
    double sigma = 0.2;
    std::uint64_t seed = 1;
    /// Lower bound on the multiplier, keeping f = g*n strictly positive wherever g is.
    double floor = 0.05;

    void validate() const {
        detail::require(std::isfinite(sigma) && sigma >= 0.0, "speckle sigma must be >= 0");
        detail::require(floor > 0.0 && floor <= 1.0, "speckle floor must be in (0,1]");
    }
};

/**
 * Multiplicative speckle: f = clamp(g * n, 0, 1) with
 * n = max(floor, 1 + sigma * u), u ~ N(0,1) i.i.d. in row-major order.
 */
inline GrayImage apply_speckle(const GrayImage& img, const SpeckleParams& params) {
    params.validate();
    if (params.sigma == 0.0) {
        return img;
    }
    Rng rng(params.seed);
    std::vector<double> out(img.size());
    auto src = img.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double n = std::max(params.floor, 1.0 + params.sigma * rng.normal());
        out[i] = std::clamp(src[i] * n, 0.0, 1.0);
    }
    return GrayImage(img.width(), img.height(), std::move(out));
}

/// ln(img + eps). Turns the multiplicative model into an additive one.
inline RealField log_transform(const GrayImage& img, double eps = kDefaultLogEps) {
    detail::require(eps > 0.0, "log-domain eps must be positive");
    RealField out(img.width(), img.height());
    auto src = img.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = std::log(src[i] + eps);
    }
    return out;
}

/// Inverse of log_transform with the same eps, clamped back into [0,1].
inline GrayImage exp_transform(const RealField& field, double eps = kDefaultLogEps) {
    std::vector<double> out(field.size());
    auto src = field.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = std::exp(src[i]) - eps;
        out[i] = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    }
    return GrayImage(field.width(), field.height(), std::move(out));
}

}  // namespace echokit
