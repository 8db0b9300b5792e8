#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "echokit/error.hpp"
#include "echokit/glcm.hpp"
#include "echokit/image.hpp"
#include "echokit/random.hpp"

namespace echokit {

enum class MetricKind { kEuclidean, kChiSquare, kCosine, kMinkowski };

struct DistanceMetric {
    MetricKind kind = MetricKind::kEuclidean;
    /// Minkowski exponent; ignored by the other kinds.
    double p = 2.0;

    static DistanceMetric euclidean() { return {MetricKind::kEuclidean, 2.0}; }
    static DistanceMetric chi_square() { return {MetricKind::kChiSquare, 2.0}; }
    static DistanceMetric cosine() { return {MetricKind::kCosine, 2.0}; }
    static DistanceMetric minkowski(double p) {
        detail::require(p >= 1.0, "Minkowski exponent must be >= 1");
        return {MetricKind::kMinkowski, p};
    }

    /// Accepts "euclidean", "chi_square" (or "chi-square"), "cosine",
    /// "minkowski" (p = 3 unless given as "minkowski:<p>").
    static DistanceMetric parse(const std::string& text) {
        if (text == "euclidean") return euclidean();
        if (text == "chi_square" || text == "chi-square" || text == "chisquare") return chi_square();
        if (text == "cosine") return cosine();
        if (text == "minkowski") return minkowski(3.0);
        if (text.rfind("minkowski:", 0) == 0) {
            std::size_t used = 0;
            double p = 0.0;
            try {
                p = std::stod(text.substr(10), &used);
            } catch (const std::exception&) {
                used = 0;
            }
            detail::require(used == text.size() - 10 && used > 0,
                            "malformed Minkowski exponent in '" + text + "'");
            return minkowski(p);
        }
        throw InvalidArgument("unknown distance metric '" + text + "'");
    }

    std::string name() const {
        switch (kind) {
            case MetricKind::kEuclidean: return "euclidean";
            case MetricKind::kChiSquare: return "chi_square";
            case MetricKind::kCosine: return "cosine";
            case MetricKind::kMinkowski: break;
        }
        std::string s = std::to_string(p);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return "minkowski:" + s;
    }

    bool operator==(const DistanceMetric&) const = default;
};

inline constexpr double kChiSquareDelta = 1e-12;

/**
 * Distance between two feature vectors already scaled into [0,1].
 *
 * cosine is 1 - a.b / (|a| |b|), with 1 when exactly one vector is zero and
 * 0 when both are.
 */
inline double distance(std::span<const double> a, std::span<const double> b, const DistanceMetric& metric) {
    detail::require(a.size() == b.size(), "feature dimension mismatch");
    switch (metric.kind) {
        case MetricKind::kEuclidean: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
            return std::sqrt(s);
        }
        case MetricKind::kMinkowski: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::abs(a[i] - b[i]), metric.p);
            return std::pow(s, 1.0 / metric.p);
        }
        case MetricKind::kChiSquare: {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                s += d * d / (a[i] + b[i] + kChiSquareDelta);
            }
            return s;
        }
        case MetricKind::kCosine: {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                dot += a[i] * b[i];
                na += a[i] * a[i];
                nb += b[i] * b[i];
            }
            if (na == 0.0 || nb == 0.0) {
                return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
            }
            return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
        }
    }
    return 0.0;
}

inline double distance(const FeatureVector& a, const FeatureVector& b, const DistanceMetric& metric) {
    const auto x = a.to_array();
    const auto y = b.to_array();
    return distance(std::span<const double>(x), std::span<const double>(y), metric);
}

struct Sample {
    std::vector<double> features;
    int label = 0;
};

/// Labeled feature vectors plus per-dimension min/max for [0,1] scaling.
struct TrainingSet {
    std::vector<Sample> samples;
    std::vector<double> feature_min;
    std::vector<double> feature_max;

    std::size_t dimension() const { return feature_min.size(); }

    /// Recomputes the scaling bounds from the samples.
    static TrainingSet from_samples(std::vector<Sample> samples) {
        detail::require(!samples.empty(), "training set must not be empty");
        const std::size_t dim = samples.front().features.size();
        detail::require(dim > 0, "training features must not be empty");
        TrainingSet set;
        set.feature_min = samples.front().features;
        set.feature_max = samples.front().features;
        for (const auto& s : samples) {
            detail::require(s.features.size() == dim, "training samples differ in dimension");
            detail::require(s.label >= 0, "class ids must be non-negative");
            for (std::size_t d = 0; d < dim; ++d) {
                detail::require(std::isfinite(s.features[d]), "training features must be finite");
                set.feature_min[d] = std::min(set.feature_min[d], s.features[d]);
                set.feature_max[d] = std::max(set.feature_max[d], s.features[d]);
            }
        }
        set.samples = std::move(samples);
        return set;
    }
};

/**
 * CSV with header "f0,...,f<d-1>,class" and one row per sample. Values are
 * written with 17 significant digits; loading recomputes the scaling bounds,
 * so a round trip reproduces the set exactly.
 */
inline void save_training_set(const TrainingSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << std::setprecision(17);
    for (std::size_t d = 0; d < set.dimension(); ++d) out << 'f' << d << ',';
    out << "class\n";
    for (const auto& s : set.samples) {
        for (double v : s.features) out << v << ',';
        out << s.label << '\n';
    }
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

inline TrainingSet load_training_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "': no such file");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw CorruptFile(path.string() + ": empty training set file");
    }
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 2 || line.substr(line.rfind(',') + 1) != "class") {
        throw CorruptFile(path.string() + ": header must be feature columns followed by \"class\"");
    }
    std::vector<Sample> samples;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(row);
        Sample s;
        const char* p = line.c_str();
        for (std::size_t c = 0; c < columns; ++c) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            const char expected = c + 1 < columns ? ',' : '\0';
            if (end == p || *end != expected) {
                throw CorruptFile(where + ": expected " + std::to_string(columns) + " numeric columns");
            }
            if (c + 1 < columns) {
                s.features.push_back(v);
            } else {
                if (v < 0.0 || v != std::floor(v)) throw CorruptFile(where + ": class must be a non-negative integer");
                s.label = static_cast<int>(v);
            }
            p = end + 1;
        }
        samples.push_back(std::move(s));
    }
    if (samples.empty()) {
        throw CorruptFile(path.string() + ": training set has no rows");
    }
    return TrainingSet::from_samples(std::move(samples));
}

inline std::vector<double> to_vector(const FeatureVector& f) {
    const auto a = f.to_array();
    return {a.begin(), a.end()};
}

/**
 * Draws `per_class` pixels of every class without replacement. One seeded
 * stream serves all classes in ascending id order; candidates are listed in
 * row-major order before shuffling.
 */
inline TrainingSet build_training_set(const FeatureField& features, const LabelMask& mask, int per_class,
                                      std::uint64_t seed) {
    detail::require(per_class >= 1, "per-class sample count must be >= 1");
    detail::require(features.width() == mask.width() && features.height() == mask.height(),
                    "feature field and mask dimensions differ");
    const int classes = mask.class_count();
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(classes));
    auto labels = mask.values();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    Rng rng(seed);
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class));
    auto field = features.values();
    for (int c = 0; c < classes; ++c) {
        auto& pool = members[static_cast<std::size_t>(c)];
        detail::require(!pool.empty(), "class " + std::to_string(c) + " is absent from the mask");
        if (pool.size() < static_cast<std::size_t>(per_class)) {
            throw InvalidArgument("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                                  " pixels, fewer than the requested " + std::to_string(per_class));
        }
        rng.sample_prefix(pool, static_cast<std::size_t>(per_class));
        for (int i = 0; i < per_class; ++i) {
            samples.push_back({to_vector(field[pool[static_cast<std::size_t>(i)]]), c});
        }
    }
    return TrainingSet::from_samples(std::move(samples));
}

struct Prediction {
    int label = 0;
    /// Distances of the k nearest neighbours, nearest first.
    std::vector<double> distances;
    /// Training-sample indices of those neighbours.
    std::vector<std::size_t> neighbors;
};

/**
 * k-nearest-neighbour classifier over min-max scaled features.
 *
 * Neighbour selection is a linear scan ordered by (distance, sample index).
 * The vote goes to the most frequent class; ties go to the smaller mean
 * neighbour distance, then the smaller class id.
 */
class KnnModel {
public:
    KnnModel(TrainingSet training, int k, DistanceMetric metric = DistanceMetric::euclidean())
        : training_(std::move(training)), k_(k), metric_(metric) {
        detail::require(!training_.samples.empty(), "KNN model needs training samples");
        detail::require(k >= 1 && static_cast<std::size_t>(k) <= training_.samples.size(),
                        "k must be in [1, number of training samples]");
        if (metric_.kind == MetricKind::kMinkowski) {
            detail::require(metric_.p >= 1.0, "Minkowski exponent must be >= 1");
        }
        scaled_.reserve(training_.samples.size());
        for (const auto& s : training_.samples) {
            scaled_.push_back(scale_clamped(s.features));
        }
        for (const auto& s : training_.samples) {
            classes_ = std::max(classes_, s.label + 1);
        }
    }

    int k() const { return k_; }
    const DistanceMetric& metric() const { return metric_; }
    const TrainingSet& training() const { return training_; }
    std::size_t dimension() const { return training_.dimension(); }

    /// Min-max scale with the training bounds, clamped to [0,1]. A constant
    /// dimension maps to 0.
    std::vector<double> scale_clamped(std::span<const double> raw) const {
        detail::require(raw.size() == training_.dimension(), "query dimension differs from training");
        std::vector<double> out(raw.size());
        for (std::size_t d = 0; d < raw.size(); ++d) {
            const double lo = training_.feature_min[d];
            const double span = training_.feature_max[d] - lo;
            out[d] = span > 0.0 ? std::clamp((raw[d] - lo) / span, 0.0, 1.0) : 0.0;
        }
        return out;
    }

    Prediction predict(std::span<const double> raw_query) const {
        const auto query = scale_clamped(raw_query);
        const std::size_t n = scaled_.size();
        thread_local std::vector<double> dist;
        thread_local std::vector<std::size_t> order;
        dist.resize(n);
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = distance(query, scaled_[i], metric_);
            order[i] = i;
        }
        const auto kk = static_cast<std::size_t>(k_);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                          });

        thread_local std::vector<int> votes;
        thread_local std::vector<double> dist_sum;
        votes.assign(static_cast<std::size_t>(classes_), 0);
        dist_sum.assign(static_cast<std::size_t>(classes_), 0.0);
        Prediction out;
        out.distances.reserve(kk);
        out.neighbors.reserve(kk);
        for (std::size_t r = 0; r < kk; ++r) {
            const std::size_t idx = order[r];
            const auto label = static_cast<std::size_t>(training_.samples[idx].label);
            ++votes[label];
            dist_sum[label] += dist[idx];
            out.distances.push_back(dist[idx]);
            out.neighbors.push_back(idx);
        }
        int best = -1;
        for (int c = 0; c < classes_; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            if (votes[cu] == 0) continue;
            if (best < 0) {
                best = c;
                continue;
            }
            const auto bu = static_cast<std::size_t>(best);
            const double mean_c = dist_sum[cu] / votes[cu];
            const double mean_b = dist_sum[bu] / votes[bu];
            if (votes[cu] > votes[bu] || (votes[cu] == votes[bu] && mean_c < mean_b)) {
                best = c;
            }
        }
        out.label = best;
        return out;
    }

    Prediction predict(const FeatureVector& query) const {
        const auto q = query.to_array();
        return predict(std::span<const double>(q));
    }

private:
    TrainingSet training_;
    int k_;
    DistanceMetric metric_;
    std::vector<std::vector<double>> scaled_;
    int classes_ = 0;
};

inline LabelMask segment(const FeatureField& features, const KnnModel& model) {
    detail::require(model.dimension() == FeatureVector::kSize,
                    "KNN model was not trained on GLCM feature vectors");
    LabelMask mask(features.width(), features.height());
    for (int y = 0; y < features.height(); ++y) {
        for (int x = 0; x < features.width(); ++x) {
            mask.set(x, y, model.predict(features(x, y)).label);
        }
    }
    return mask;
}

inline LabelMask segment(const GrayImage& img, const KnnModel& model, const GlcmConfig& cfg) {
    return segment(feature_field(img, cfg), model);
}

}  // namespace echokit
