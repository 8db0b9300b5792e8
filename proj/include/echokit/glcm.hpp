#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/image.hpp"

namespace echokit {

/// Translation vector t = (dx, dy) between the two pixels of a pair.
struct Offset {
    int dx = 1;
    int dy = 0;

    bool operator==(const Offset&) const = default;
};

/**
 * Gray-level co-occurrence matrix.
 *
 * counts(i,j) is the number of in-bounds pairs (s, s+t) with I(s) = i and
 * I(s+t) = j (plus the transposed count when symmetric); probs is counts
 * divided by its total.
 */
struct Glcm {
    int levels = 0;
    std::vector<std::uint64_t> counts;
    std::vector<double> probs;

    std::uint64_t count(int i, int j) const { return counts[cell(i, j)]; }
    double prob(int i, int j) const { return probs[cell(i, j)]; }
    std::size_t cell(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(levels) +
               static_cast<std::size_t>(j);
    }
};

/// Texture descriptor. `homogeneity` is sum p^2 (classically energy / ASM);
/// `local_homogeneity` is sum p / (1 + (i-j)^2).
struct FeatureVector {
    double contrast = 0.0;
    double homogeneity = 0.0;
    double entropy = 0.0;
    double local_homogeneity = 0.0;

    static constexpr std::size_t kSize = 4;

    std::array<double, kSize> to_array() const {
        return {contrast, homogeneity, entropy, local_homogeneity};
    }
    bool operator==(const FeatureVector&) const = default;
};

enum class EntropyMode {
    /// -sum p log2 p / log2(m^2), in [0,1].
    kNormalized,
    /// -sum p ln p.
    kRaw,
};

struct GlcmConfig {
    int levels = 16;
    std::vector<Offset> offsets = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    int window = 9;
    bool symmetric = true;
    EntropyMode entropy = EntropyMode::kNormalized;

    void validate() const {
        detail::require(levels >= 2 && levels <= 256, "GLCM levels must be in [2,256]");
        detail::require(window >= 3 && window % 2 == 1, "GLCM window must be odd and >= 3");
        detail::require(!offsets.empty(), "GLCM config needs at least one offset");
        for (const auto& t : offsets) {
            detail::require(t.dx != 0 || t.dy != 0, "GLCM offset must not be (0,0)");
            detail::require(std::abs(t.dx) < window && std::abs(t.dy) < window,
                            "GLCM offset does not fit inside the window");
        }
    }
};

inline Glcm compute_glcm(const QuantizedImage& q, Offset t, bool symmetric) {
    detail::require(t.dx != 0 || t.dy != 0, "GLCM offset must not be (0,0)");
    detail::require(std::abs(t.dx) < q.width() && std::abs(t.dy) < q.height(),
                    "GLCM offset larger than the image");
    const int m = q.levels();
    Glcm g{m, std::vector<std::uint64_t>(static_cast<std::size_t>(m) * m, 0),
           std::vector<double>(static_cast<std::size_t>(m) * m, 0.0)};

    // Restrict s to the rectangle where s + t stays inside the image.
    const int x0 = std::max(0, -t.dx);
    const int x1 = std::min(q.width(), q.width() - t.dx);
    const int y0 = std::max(0, -t.dy);
    const int y1 = std::min(q.height(), q.height() - t.dy);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            ++g.counts[g.cell(q(x, y), q(x + t.dx, y + t.dy))];
        }
    }
    if (symmetric) {
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                const auto both = g.counts[g.cell(i, j)] + g.counts[g.cell(j, i)];
                g.counts[g.cell(i, j)] = both;
                g.counts[g.cell(j, i)] = both;
            }
            g.counts[g.cell(i, i)] *= 2;
        }
    }
    std::uint64_t total = 0;
    for (auto c : g.counts) total += c;
    if (total > 0) {
        for (std::size_t k = 0; k < g.counts.size(); ++k) {
            g.probs[k] = static_cast<double>(g.counts[k]) / static_cast<double>(total);
        }
    }
    return g;
}

/// Features of an m x m probability matrix (row-major, summing to 1).
inline FeatureVector glcm_features(int levels, std::span<const double> probs,
                                   EntropyMode mode = EntropyMode::kNormalized) {
    detail::require(levels >= 2, "GLCM needs at least 2 levels");
    detail::require(probs.size() == static_cast<std::size_t>(levels) * levels,
                    "GLCM probability matrix has the wrong size");
    double total = 0.0;
    for (double p : probs) {
        detail::require(p >= 0.0, "GLCM probabilities must be non-negative");
        total += p;
    }
    detail::require(std::abs(total - 1.0) <= 1e-9, "GLCM is not normalized");

    FeatureVector f;
    double plogp = 0.0;
    std::size_t k = 0;
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j, ++k) {
            const double p = probs[k];
            if (p == 0.0) continue;
            const double d2 = static_cast<double>((i - j) * (i - j));
            f.contrast += d2 * p;
            f.homogeneity += p * p;
            f.local_homogeneity += p / (1.0 + d2);
            plogp += p * (mode == EntropyMode::kNormalized ? std::log2(p) : std::log(p));
        }
    }
    if (mode == EntropyMode::kNormalized) {
        f.entropy = -plogp / std::log2(static_cast<double>(levels) * levels);
    } else {
        f.entropy = -plogp;
    }
    return f;
}

inline FeatureVector glcm_features(const Glcm& g, EntropyMode mode = EntropyMode::kNormalized) {
    return glcm_features(g.levels, g.probs, mode);
}

namespace detail {

/// Average of the normalized GLCMs of one edge-replicated window, one per
/// offset. Pairs are enumerated inside the window only.
inline void accumulate_window_probs(const QuantizedImage& q, int cx, int cy, const GlcmConfig& cfg,
                                    std::vector<double>& probs) {
    const int m = q.levels();
    const int half = cfg.window / 2;
    const int w = cfg.window;
    std::fill(probs.begin(), probs.end(), 0.0);

    // Local copy of the window with replicated borders.
    thread_local std::vector<int> win;
    win.resize(static_cast<std::size_t>(w) * w);
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < w; ++i) {
            win[static_cast<std::size_t>(j) * w + i] = q.clamped(cx - half + i, cy - half + j);
        }
    }

    thread_local std::vector<std::uint32_t> counts;
    counts.assign(probs.size(), 0);
    const double per_offset = 1.0 / static_cast<double>(cfg.offsets.size());
    for (const auto& t : cfg.offsets) {
        const int x0 = std::max(0, -t.dx);
        const int x1 = std::min(w, w - t.dx);
        const int y0 = std::max(0, -t.dy);
        const int y1 = std::min(w, w - t.dy);
        std::uint32_t total = 0;
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                const int a = win[static_cast<std::size_t>(y) * w + x];
                const int b = win[static_cast<std::size_t>(y + t.dy) * w + (x + t.dx)];
                ++counts[static_cast<std::size_t>(a) * m + b];
                ++total;
                if (cfg.symmetric) {
                    ++counts[static_cast<std::size_t>(b) * m + a];
                    ++total;
                }
            }
        }
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] != 0) {
                probs[k] += static_cast<double>(counts[k]) / total * per_offset;
                counts[k] = 0;
            }
        }
    }
}

}  // namespace detail

/// Features at (x,y) from an already quantized image (levels must match cfg).
inline FeatureVector pixel_features(const QuantizedImage& q, int x, int y, const GlcmConfig& cfg) {
    detail::require(q.levels() == cfg.levels, "quantized image levels differ from GLCM config");
    detail::require(x >= 0 && y >= 0 && x < q.width() && y < q.height(), "pixel out of bounds");
    thread_local std::vector<double> probs;
    probs.assign(static_cast<std::size_t>(cfg.levels) * cfg.levels, 0.0);
    detail::accumulate_window_probs(q, x, y, cfg, probs);
    return glcm_features(cfg.levels, probs, cfg.entropy);
}

inline FeatureVector pixel_features(const GrayImage& img, int x, int y, const GlcmConfig& cfg) {
    cfg.validate();
    return pixel_features(quantize(img, cfg.levels), x, y, cfg);
}

using FeatureField = Grid<FeatureVector>;

inline FeatureField feature_field(const GrayImage& img, const GlcmConfig& cfg) {
    cfg.validate();
    const QuantizedImage q = quantize(img, cfg.levels);
    FeatureField field(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            field(x, y) = pixel_features(q, x, y, cfg);
        }
    }
    return field;
}

}  // namespace echokit
