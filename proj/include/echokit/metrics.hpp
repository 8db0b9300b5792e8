#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "echokit/error.hpp"
#include "echokit/image.hpp"

namespace echokit {

/// Reported in place of +infinity when the error energy is zero.
inline constexpr double kDecibelCap = 99.0;
inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct QualityReport {
    double mse = 0.0;
    double psnr_db = 0.0;
    double snr_db = 0.0;
    double ssim = 0.0;
    /// Empty when the reference has no Laplacian energy.
    std::optional<double> lmse;
    double residual_variance = 0.0;
};

inline double mse(const GrayImage& ref, const GrayImage& proc) {
    detail::require(ref.width() == proc.width() && ref.height() == proc.height(),
                    "images differ in dimensions");
    auto a = ref.values();
    auto b = proc.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

/// 10 log10(1 / mse) on intensities in [0,1], capped at 99 dB.
inline double psnr_from_mse(double mse_value) {
    if (mse_value <= 0.0) return kDecibelCap;
    return std::min(kDecibelCap, 10.0 * std::log10(1.0 / mse_value));
}

/// Mean SSIM over every 8x8 window (stride 1, uniform weights, 1/N moments).
inline double ssim(const GrayImage& a, const GrayImage& b) {
    detail::require(a.width() == b.width() && a.height() == b.height(), "images differ in dimensions");
    detail::require(a.width() >= kSsimWindow && a.height() >= kSsimWindow,
                    "SSIM needs images of at least 8x8 pixels");
    const int wx = a.width() - kSsimWindow + 1;
    const int wy = a.height() - kSsimWindow + 1;
    constexpr double n = kSsimWindow * kSsimWindow;
    double total = 0.0;
    for (int y0 = 0; y0 < wy; ++y0) {
        for (int x0 = 0; x0 < wx; ++x0) {
            double sa = 0.0, sb = 0.0;
            for (int y = y0; y < y0 + kSsimWindow; ++y) {
                for (int x = x0; x < x0 + kSsimWindow; ++x) {
                    sa += a(x, y);
                    sb += b(x, y);
                }
            }
            const double ma = sa / n;
            const double mb = sb / n;
            double vaa = 0.0, vbb = 0.0, vab = 0.0;
            for (int y = y0; y < y0 + kSsimWindow; ++y) {
                for (int x = x0; x < x0 + kSsimWindow; ++x) {
                    const double da = a(x, y) - ma;
                    const double db = b(x, y) - mb;
                    vaa += da * da;
                    vbb += db * db;
                    vab += da * db;
                }
            }
            vaa /= n;
            vbb /= n;
            vab /= n;
            total += ((2.0 * ma * mb + kSsimC1) * (2.0 * vab + kSsimC2)) /
                     ((ma * ma + mb * mb + kSsimC1) * (vaa + vbb + kSsimC2));
        }
    }
    return total / (static_cast<double>(wx) * wy);
}

namespace detail {

inline double laplacian(const GrayImage& img, int x, int y) {
    return img(x, y - 1) + img(x - 1, y) + img(x + 1, y) + img(x, y + 1) - 4.0 * img(x, y);
}

}  // namespace detail

/// sum (L ref - L proc)^2 / sum (L ref)^2 over interior pixels, L the 4-neighbour Laplacian.
inline std::optional<double> lmse(const GrayImage& ref, const GrayImage& proc) {
    detail::require(ref.width() == proc.width() && ref.height() == proc.height(),
                    "images differ in dimensions");
    double num = 0.0, den = 0.0;
    for (int y = 1; y + 1 < ref.height(); ++y) {
        for (int x = 1; x + 1 < ref.width(); ++x) {
            const double lr = detail::laplacian(ref, x, y);
            const double lp = detail::laplacian(proc, x, y);
            num += (lr - lp) * (lr - lp);
            den += lr * lr;
        }
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

inline QualityReport quality_report(const GrayImage& ref, const GrayImage& proc) {
    detail::require(ref.width() == proc.width() && ref.height() == proc.height(),
                    "images differ in dimensions");
    detail::require(ref.width() >= kSsimWindow && ref.height() >= kSsimWindow,
                    "quality metrics need images of at least 8x8 pixels");
    QualityReport r;
    auto a = ref.values();
    auto b = proc.values();
    double err = 0.0, energy = 0.0, residual_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        err += d * d;
        energy += a[i] * a[i];
        residual_sum += d;
    }
    const auto count = static_cast<double>(a.size());
    r.mse = err / count;
    r.psnr_db = psnr_from_mse(r.mse);
    r.snr_db = err == 0.0 ? kDecibelCap : std::min(kDecibelCap, 10.0 * std::log10(energy / err));
    r.ssim = ssim(ref, proc);
    r.lmse = lmse(ref, proc);
    const double residual_mean = residual_sum / count;
    double var = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - b[i]) - residual_mean;
        var += d * d;
    }
    r.residual_variance = var / count;
    return r;
}

/// Binary pixel confusion counts; rates are empty when their denominator is 0.
struct ConfusionStats {
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::optional<double> accuracy;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

inline ConfusionStats confusion_from_counts(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp,
                                            std::uint64_t fn) {
    ConfusionStats s{tp, tn, fp, fn, {}, {}, {}};
    const auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    s.accuracy = ratio(tp + tn, tp + tn + fp + fn);
    s.sensitivity = ratio(tp, tp + fn);
    s.specificity = ratio(tn, tn + fp);
    return s;
}

inline ConfusionStats confusion_stats(const LabelMask& pred, const LabelMask& truth, int positive) {
    detail::require(pred.width() == truth.width() && pred.height() == truth.height(),
                    "masks differ in dimensions");
    auto p = pred.values();
    auto t = truth.values();
    detail::require(std::find(t.begin(), t.end(), positive) != t.end(),
                    "positive class " + std::to_string(positive) + " is absent from the ground truth");
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool predicted = p[i] == positive;
        const bool actual = t[i] == positive;
        if (predicted && actual) ++tp;
        else if (!predicted && !actual) ++tn;
        else if (predicted) ++fp;
        else ++fn;
    }
    return confusion_from_counts(tp, tn, fp, fn);
}

/// Fraction of pixels whose labels agree (multi-class accuracy).
inline double label_agreement(const LabelMask& pred, const LabelMask& truth) {
    detail::require(pred.width() == truth.width() && pred.height() == truth.height(),
                    "masks differ in dimensions");
    auto p = pred.values();
    auto t = truth.values();
    std::size_t same = 0;
    for (std::size_t i = 0; i < p.size(); ++i) same += p[i] == t[i] ? 1 : 0;
    return static_cast<double>(same) / static_cast<double>(p.size());
}

// ------------------------------------------------------------ JSON

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Undefined metrics are written as null and explained under "undefined".
inline nlohmann::json to_json(const QualityReport& r) {
    nlohmann::json j = nlohmann::json::object();
    j["mse"] = r.mse;
    j["psnr_db"] = r.psnr_db;
    j["snr_db"] = r.snr_db;
    j["ssim"] = r.ssim;
    j["lmse"] = detail::optional_number(r.lmse);
    j["residual_variance"] = r.residual_variance;
    if (!r.lmse) {
        j["undefined"] = {{"lmse", "reference image has zero Laplacian energy"}};
    }
    return j;
}

inline nlohmann::json to_json(const ConfusionStats& s) {
    nlohmann::json j = nlohmann::json::object();
    j["tp"] = s.tp;
    j["tn"] = s.tn;
    j["fp"] = s.fp;
    j["fn"] = s.fn;
    j["accuracy"] = detail::optional_number(s.accuracy);
    j["sensitivity"] = detail::optional_number(s.sensitivity);
    j["specificity"] = detail::optional_number(s.specificity);
    nlohmann::json undefined = nlohmann::json::object();
    if (!s.sensitivity) undefined["sensitivity"] = "no positive pixels in the ground truth";
    if (!s.specificity) undefined["specificity"] = "no negative pixels in the ground truth";
    if (!undefined.empty()) j["undefined"] = undefined;
    return j;
}

}  // namespace echokit
