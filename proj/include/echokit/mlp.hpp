#pragma once

// Inter/intra pixel classifier: a 108-39-1 logistic network over a
// multi-scale GLCM descriptor, trained by full-batch gradient descent on
// mean squared error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/glcm.hpp"
#include "echokit/image.hpp"
#include "echokit/random.hpp"

namespace echokit {

inline constexpr int kNnInputs = 108;
inline constexpr int kNnHidden = 39;

// ------------------------------------------------------------ descriptor

/// 4 GLCM features x 27 configurations, every entry in [0,1].
using NnFeatureVector = std::array<double, kNnInputs>;

struct NnDescriptorConfig {
    int levels = 16;
};

/// One single-offset GLCM configuration of the descriptor.
struct NnConfiguration {
    int window = 0;
    int distance = 0;
    int orientation_deg = 0;

    Offset offset() const {
        switch (orientation_deg) {
            case 0: return {distance, 0};
            case 45: return {distance, -distance};
            default: return {0, -distance};
        }
    }
};

/**
 * Configuration order of the descriptor: window (5, 9, 13) outermost, then
 * distance (1, 2, 3), then orientation (0, 45, 90 degrees). Configuration c
 * occupies entries [4c, 4c+4) as (contrast, homogeneity, entropy, LH).
 * Orientation 45 degrees is the offset (d, -d): right and up, y growing down.
 */
inline const std::array<NnConfiguration, 27>& nn_configurations() {
    static const std::array<NnConfiguration, 27> table = [] {
        std::array<NnConfiguration, 27> t{};
        std::size_t c = 0;
        for (int window : {5, 9, 13}) {
            for (int distance : {1, 2, 3}) {
                for (int orientation : {0, 45, 90}) {
                    t[c++] = {window, distance, orientation};
                }
            }
        }
        return t;
    }();
    return table;
}

inline GlcmConfig glcm_config_for(const NnConfiguration& c, int levels) {
    GlcmConfig cfg;
    cfg.levels = levels;
    cfg.window = c.window;
    cfg.offsets = {c.offset()};
    cfg.symmetric = true;
    return cfg;
}

namespace detail {

/// Edge-replicated window copy plus co-occurrence scratch space, reused
/// across the 27 configurations of one pixel.
struct DescriptorScratch {
    std::vector<int> window;
    std::vector<std::uint32_t> counts;
    std::vector<std::size_t> touched;
};

inline FeatureVector single_offset_features(const std::vector<int>& win, int w, int levels, Offset t,
                                            DescriptorScratch& scratch) {
    auto& counts = scratch.counts;
    auto& touched = scratch.touched;
    touched.clear();
    const int x0 = std::max(0, -t.dx);
    const int x1 = std::min(w, w - t.dx);
    const int y0 = std::max(0, -t.dy);
    const int y1 = std::min(w, w - t.dy);
    auto bump = [&](std::size_t cell) {
        if (counts[cell]++ == 0) touched.push_back(cell);
    };
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const auto a = static_cast<std::size_t>(win[static_cast<std::size_t>(y) * w + x]);
            const auto b = static_cast<std::size_t>(win[static_cast<std::size_t>(y + t.dy) * w + (x + t.dx)]);
            bump(a * levels + b);
            bump(b * levels + a);
        }
    }
    const double total = 2.0 * (x1 - x0) * (y1 - y0);
    // Row-major cell order, matching glcm_features.
    std::sort(touched.begin(), touched.end());
    FeatureVector f;
    double plogp = 0.0;
    for (auto cell : touched) {
        const double p = counts[cell] / total;
        counts[cell] = 0;
        const auto i = static_cast<int>(cell / static_cast<std::size_t>(levels));
        const auto j = static_cast<int>(cell % static_cast<std::size_t>(levels));
        const double d2 = static_cast<double>((i - j) * (i - j));
        f.contrast += d2 * p;
        f.homogeneity += p * p;
        f.local_homogeneity += p / (1.0 + d2);
        plogp += p * std::log2(p);
    }
    f.entropy = -plogp / std::log2(static_cast<double>(levels) * levels);
    return f;
}

}  // namespace detail

/// Contrast is divided by its maximum (m-1)^2; the other features are already in [0,1].
inline NnFeatureVector pixel_nn_features(const QuantizedImage& q, int x, int y) {
    detail::require(x >= 0 && y >= 0 && x < q.width() && y < q.height(), "pixel out of bounds");
    thread_local detail::DescriptorScratch scratch;
    const int levels = q.levels();
    scratch.counts.assign(static_cast<std::size_t>(levels) * levels, 0);
    NnFeatureVector out{};
    const double contrast_scale = 1.0 / ((levels - 1.0) * (levels - 1.0));
    const auto& configs = nn_configurations();
    int current_window = 0;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const int w = configs[c].window;
        if (w != current_window) {
            const int half = w / 2;
            scratch.window.resize(static_cast<std::size_t>(w) * w);
            for (int j = 0; j < w; ++j) {
                for (int i = 0; i < w; ++i) {
                    scratch.window[static_cast<std::size_t>(j) * w + i] = q.clamped(x - half + i, y - half + j);
                }
            }
            current_window = w;
        }
        const FeatureVector f =
            detail::single_offset_features(scratch.window, w, levels, configs[c].offset(), scratch);
        out[4 * c + 0] = std::min(1.0, f.contrast * contrast_scale);
        out[4 * c + 1] = f.homogeneity;
        out[4 * c + 2] = f.entropy;
        out[4 * c + 3] = f.local_homogeneity;
    }
    return out;
}

inline NnFeatureVector pixel_nn_features(const GrayImage& img, int x, int y,
                                         const NnDescriptorConfig& cfg = {}) {
    detail::require(x >= 0 && y >= 0 && x < img.width() && y < img.height(), "pixel out of bounds");
    return pixel_nn_features(quantize(img, cfg.levels), x, y);
}

using NnFeatureField = Grid<NnFeatureVector>;

inline NnFeatureField nn_feature_field(const GrayImage& img, const NnDescriptorConfig& cfg = {}) {
    const QuantizedImage q = quantize(img, cfg.levels);
    NnFeatureField field(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            field(x, y) = pixel_nn_features(q, x, y);
        }
    }
    return field;
}

/// 1 where the 8-neighbourhood holds a different class (inter), 0 otherwise.
inline LabelMask inter_intra_truth(const LabelMask& mask) {
    LabelMask out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            bool boundary = false;
            for (int dy = -1; dy <= 1 && !boundary; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (mask.contains(x + dx, y + dy) && mask(x + dx, y + dy) != mask(x, y)) {
                        boundary = true;
                        break;
                    }
                }
            }
            out.set(x, y, boundary ? 1 : 0);
        }
    }
    return out;
}

// ------------------------------------------------------------ network

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct MlpNetwork {
    /// kNnHidden rows of kNnInputs weights, row-major.
    std::vector<double> w1 = std::vector<double>(static_cast<std::size_t>(kNnHidden) * kNnInputs, 0.0);
    std::vector<double> b1 = std::vector<double>(kNnHidden, 0.0);
    std::vector<double> w2 = std::vector<double>(kNnHidden, 0.0);
    double b2 = 0.0;

    static constexpr std::size_t kParameterCount =
        static_cast<std::size_t>(kNnHidden) * kNnInputs + 2 * kNnHidden + 1;

    double& w1_at(int hidden, int input) {
        return w1[static_cast<std::size_t>(hidden) * kNnInputs + static_cast<std::size_t>(input)];
    }

    /// Seeded uniform initialization in [-scale, scale]: w1, b1, w2, b2 in that order.
    static MlpNetwork initialized(std::uint64_t seed, double scale) {
        detail::require(scale >= 0.0 && std::isfinite(scale), "initialization scale must be >= 0");
        MlpNetwork net;
        Rng rng(seed);
        for (double& v : net.w1) v = rng.uniform(-scale, scale);
        for (double& v : net.b1) v = rng.uniform(-scale, scale);
        for (double& v : net.w2) v = rng.uniform(-scale, scale);
        net.b2 = rng.uniform(-scale, scale);
        return net;
    }

    /// Flat view order: w1, b1, w2, b2.
    double& parameter(std::size_t index) {
        const std::size_t n1 = w1.size();
        if (index < n1) return w1[index];
        index -= n1;
        if (index < b1.size()) return b1[index];
        index -= b1.size();
        if (index < w2.size()) return w2[index];
        return b2;
    }

    void validate() const {
        detail::require(w1.size() == static_cast<std::size_t>(kNnHidden) * kNnInputs &&
                            b1.size() == kNnHidden && w2.size() == kNnHidden,
                        "network shape must be 108-39-1");
        auto finite = [](const std::vector<double>& v) {
            for (double x : v) {
                if (!std::isfinite(x)) return false;
            }
            return true;
        };
        detail::require(finite(w1) && finite(b1) && finite(w2) && std::isfinite(b2),
                        "network parameters must be finite");
    }

    bool operator==(const MlpNetwork&) const = default;
};

namespace detail {

inline void hidden_activations(const MlpNetwork& net, const NnFeatureVector& x, double* hidden) {
    for (int j = 0; j < kNnHidden; ++j) {
        const double* row = &net.w1[static_cast<std::size_t>(j) * kNnInputs];
        double z = net.b1[static_cast<std::size_t>(j)];
        for (int i = 0; i < kNnInputs; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
        hidden[j] = sigmoid(z);
    }
}

inline double output_from_hidden(const MlpNetwork& net, const double* hidden) {
    double z = net.b2;
    for (int j = 0; j < kNnHidden; ++j) z += net.w2[static_cast<std::size_t>(j)] * hidden[j];
    return sigmoid(z);
}

}  // namespace detail

inline double forward(const MlpNetwork& net, const NnFeatureVector& x) {
    std::array<double, kNnHidden> hidden{};
    detail::hidden_activations(net, x, hidden.data());
    return detail::output_from_hidden(net, hidden.data());
}

struct LabeledVector {
    NnFeatureVector features{};
    int label = 0;
};

/// 0.5 * mean((y_hat - y)^2)
inline double mse_loss(const MlpNetwork& net, const std::vector<LabeledVector>& data) {
    detail::require(!data.empty(), "loss needs at least one sample");
    long double total = 0.0L;
    for (const auto& s : data) {
        const long double e = static_cast<long double>(forward(net, s.features)) - s.label;
        total += e * e;
    }
    return static_cast<double>(0.5L * total / static_cast<long double>(data.size()));
}

/// Gradient of mse_loss, laid out like MlpNetwork. Returns the loss.
inline double loss_gradient(const MlpNetwork& net, const std::vector<LabeledVector>& data, MlpNetwork& grad) {
    detail::require(!data.empty(), "gradient needs at least one sample");
    std::fill(grad.w1.begin(), grad.w1.end(), 0.0);
    std::fill(grad.b1.begin(), grad.b1.end(), 0.0);
    std::fill(grad.w2.begin(), grad.w2.end(), 0.0);
    grad.b2 = 0.0;

    const double inv_n = 1.0 / static_cast<double>(data.size());
    double loss = 0.0;
    std::array<double, kNnHidden> hidden{};
    std::array<double, kNnHidden> delta_hidden{};
    for (const auto& s : data) {
        detail::hidden_activations(net, s.features, hidden.data());
        const double out = detail::output_from_hidden(net, hidden.data());
        const double err = out - s.label;
        loss += err * err;
        const double delta_out = err * out * (1.0 - out) * inv_n;
        grad.b2 += delta_out;
        for (int j = 0; j < kNnHidden; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            grad.w2[ju] += delta_out * hidden[ju];
            delta_hidden[ju] = delta_out * net.w2[ju] * hidden[ju] * (1.0 - hidden[ju]);
        }
        for (int j = 0; j < kNnHidden; ++j) {
            const double d = delta_hidden[static_cast<std::size_t>(j)];
            if (d == 0.0) continue;
            grad.b1[static_cast<std::size_t>(j)] += d;
            double* row = &grad.w1[static_cast<std::size_t>(j) * kNnInputs];
            for (int i = 0; i < kNnInputs; ++i) row[i] += d * s.features[static_cast<std::size_t>(i)];
        }
    }
    return 0.5 * loss * inv_n;
}

struct TrainConfig {
    double learning_rate = 2.0;
    int epochs = 1500;
    std::uint64_t seed = 7;
    double init_scale = 0.1;

    void validate() const {
        detail::require(learning_rate > 0.0 && learning_rate <= 10.0, "learning rate must be in (0,10]");
        detail::require(epochs >= 1, "epochs must be >= 1");
        detail::require(init_scale >= 0.0 && std::isfinite(init_scale), "init scale must be >= 0");
    }
};

struct TrainResult {
    MlpNetwork network;
    /// Loss at the start of every epoch (before that epoch's update).
    std::vector<double> loss_trace;
};

/// Full-batch gradient descent from `net`.
inline TrainResult train(MlpNetwork net, const std::vector<LabeledVector>& data, const TrainConfig& cfg) {
    cfg.validate();
    net.validate();
    detail::require(!data.empty(), "training data must not be empty");
    for (const auto& s : data) {
        detail::require(s.label == 0 || s.label == 1, "training labels must be 0 or 1");
    }
    TrainResult result;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));
    MlpNetwork grad;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = loss_gradient(net, data, grad);
        if (!std::isfinite(loss)) {
            throw NumericalError("training diverged: loss is " + std::to_string(loss) + " at epoch " +
                                 std::to_string(epoch));
        }
        result.loss_trace.push_back(loss);
        for (std::size_t i = 0; i < net.w1.size(); ++i) net.w1[i] -= cfg.learning_rate * grad.w1[i];
        for (std::size_t i = 0; i < net.b1.size(); ++i) net.b1[i] -= cfg.learning_rate * grad.b1[i];
        for (std::size_t i = 0; i < net.w2.size(); ++i) net.w2[i] -= cfg.learning_rate * grad.w2[i];
        net.b2 -= cfg.learning_rate * grad.b2;
    }
    result.network = std::move(net);
    return result;
}

/// Starts from MlpNetwork::initialized(cfg.seed, cfg.init_scale).
inline TrainResult train(const std::vector<LabeledVector>& data, const TrainConfig& cfg) {
    cfg.validate();
    return train(MlpNetwork::initialized(cfg.seed, cfg.init_scale), data, cfg);
}

namespace detail {

/// mse_loss evaluated entirely in extended precision, so that central
/// differences of it are not dominated by rounding.
inline long double precise_loss(const MlpNetwork& net, const std::vector<LabeledVector>& data) {
    long double total = 0.0L;
    for (const auto& s : data) {
        long double z2 = net.b2;
        for (int j = 0; j < kNnHidden; ++j) {
            long double z = net.b1[static_cast<std::size_t>(j)];
            const double* row = &net.w1[static_cast<std::size_t>(j) * kNnInputs];
            for (int i = 0; i < kNnInputs; ++i) {
                z += static_cast<long double>(row[i]) * s.features[static_cast<std::size_t>(i)];
            }
            z2 += net.w2[static_cast<std::size_t>(j)] / (1.0L + std::exp(-z));
        }
        const long double e = 1.0L / (1.0L + std::exp(-z2)) - s.label;
        total += e * e;
    }
    return 0.5L * total / static_cast<long double>(data.size());
}

}  // namespace detail

struct GradientCheckOptions {
    std::size_t parameters = 64;
    double step = 1e-5;
    std::uint64_t seed = 99;
};

/**
 * Max relative error between the backpropagated gradient and central
 * differences over a seeded random subset of parameters. The denominator
 * is max(|analytic|, 1e-8), so vanishing gradients cannot blow it up.
 */
inline double gradient_check(const MlpNetwork& net, const std::vector<LabeledVector>& data,
                             const GradientCheckOptions& opts = {}) {
    detail::require(opts.parameters >= 1, "gradient check needs at least one parameter");
    detail::require(!data.empty(), "gradient check needs at least one sample");
    MlpNetwork grad;
    loss_gradient(net, data, grad);
    MlpNetwork probe = net;
    Rng rng(opts.seed);
    double worst = 0.0;
    for (std::size_t n = 0; n < opts.parameters; ++n) {
        const auto index = static_cast<std::size_t>(rng.below(MlpNetwork::kParameterCount));
        double& slot = probe.parameter(index);
        const double saved = slot;
        slot = saved + opts.step;
        const double up = slot;
        const long double plus = detail::precise_loss(probe, data);
        slot = saved - opts.step;
        const double down = slot;
        const long double minus = detail::precise_loss(probe, data);
        slot = saved;
        // Divide by the step actually taken after rounding saved +/- step.
        const double numeric = static_cast<double>((plus - minus) / (static_cast<long double>(up) - down));
        const double analytic = grad.parameter(index);
        const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-8);
        worst = std::max(worst, rel);
    }
    return worst;
}

/// 1 (inter) where forward >= 0.5, 0 (intra) elsewhere.
inline LabelMask classify_inter_intra(const MlpNetwork& net, const NnFeatureField& features) {
    LabelMask out(features.width(), features.height());
    for (int y = 0; y < features.height(); ++y) {
        for (int x = 0; x < features.width(); ++x) {
            out.set(x, y, forward(net, features(x, y)) >= 0.5 ? 1 : 0);
        }
    }
    return out;
}

inline LabelMask classify_inter_intra(const MlpNetwork& net, const GrayImage& img,
                                      const NnDescriptorConfig& cfg = {}) {
    return classify_inter_intra(net, nn_feature_field(img, cfg));
}

// ------------------------------------------------------------ regression

struct RegressionStats {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;
};

/// Least-squares fit target = intercept + slope * predicted, with Pearson r.
inline RegressionStats regression_stats(const std::vector<double>& predicted, const std::vector<double>& target) {
    detail::require(predicted.size() == target.size(), "regression inputs differ in length");
    detail::require(predicted.size() >= 2, "regression needs at least two points");
    const double n = static_cast<double>(predicted.size());
    double mean_p = 0.0, mean_t = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        mean_p += predicted[i];
        mean_t += target[i];
    }
    mean_p /= n;
    mean_t /= n;
    double spp = 0.0, stt = 0.0, spt = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double dp = predicted[i] - mean_p;
        const double dt = target[i] - mean_t;
        spp += dp * dp;
        stt += dt * dt;
        spt += dp * dt;
    }
    if (stt == 0.0) {
        throw InvalidArgument("regression target is constant; correlation is undefined");
    }
    if (spp == 0.0) {
        throw InvalidArgument("regression predictor is constant; slope is undefined");
    }
    RegressionStats s;
    s.slope = spt / spp;
    s.intercept = mean_t - s.slope * mean_p;
    s.r = std::clamp(spt / std::sqrt(spp * stt), -1.0, 1.0);
    return s;
}

// ------------------------------------------------------------ weights file

/**
 * Text layout:
 *   line 1: "echokit-mlp 1"
 *   line 2: "108 39 1"
 *   39 lines of 108 w1 values (row = hidden unit), then one line of 39
 *   b1 values, one line of 39 w2 values, one line holding b2.
 * Values are written with 17 significant digits, so a round trip is exact.
 */
inline void save_network(const MlpNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << std::setprecision(17);
    out << "echokit-mlp 1\n" << kNnInputs << ' ' << kNnHidden << " 1\n";
    auto write_row = [&](const double* values, int count) {
        for (int i = 0; i < count; ++i) out << (i ? " " : "") << values[i];
        out << '\n';
    };
    for (int j = 0; j < kNnHidden; ++j) write_row(&net.w1[static_cast<std::size_t>(j) * kNnInputs], kNnInputs);
    write_row(net.b1.data(), kNnHidden);
    write_row(net.w2.data(), kNnHidden);
    write_row(&net.b2, 1);
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

inline MlpNetwork load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "': no such file");
    }
    std::string magic;
    int version = 0, inputs = 0, hidden = 0, outputs = 0;
    in >> magic >> version >> inputs >> hidden >> outputs;
    if (!in || magic != "echokit-mlp") {
        throw CorruptFile(path.string() + ": not an echokit network file");
    }
    if (version != 1) {
        throw UnsupportedFormat(path.string() + ": unsupported network file version " + std::to_string(version));
    }
    if (inputs != kNnInputs || hidden != kNnHidden || outputs != 1) {
        throw UnsupportedFormat(path.string() + ": network shape must be 108 39 1");
    }
    MlpNetwork net;
    for (double& v : net.w1) in >> v;
    for (double& v : net.b1) in >> v;
    for (double& v : net.w2) in >> v;
    in >> net.b2;
    if (!in) {
        throw CorruptFile(path.string() + ": truncated network file");
    }
    net.validate();
    return net;
}

}  // namespace echokit
