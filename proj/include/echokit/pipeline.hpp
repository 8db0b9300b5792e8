#pragma once

// End-to-end run: acquire -> speckle -> fractional denoise -> GLCM features
// -> KNN segmentation -> post-processing -> optional inter/intra network ->
// report. Every stage image passes through the 8-bit grid, so a run equals
// the chain of the corresponding CLI subcommands operating on files.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echokit/config.hpp"
#include "echokit/error.hpp"
#include "echokit/fracfilter.hpp"
#include "echokit/glcm.hpp"
#include "echokit/image.hpp"
#include "echokit/io.hpp"
#include "echokit/knn.hpp"
#include "echokit/metrics.hpp"
#include "echokit/mlp.hpp"
#include "echokit/morphology.hpp"
#include "echokit/noise.hpp"
#include "echokit/synthetic.hpp"

#ifndef ECHOKIT_VERSION
#define ECHOKIT_VERSION "1.0.0"
#endif

namespace echokit {

inline constexpr const char* kToolVersion = ECHOKIT_VERSION;

/// A stage failed; what() is "<stage>: <cause>".
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct ClassFeatureMean {
    int label = 0;
    std::size_t pixels = 0;
    FeatureVector mean;
};

struct KnnOutcome {
    /// Multi-class pixel agreement with the ground truth.
    double accuracy_raw = 0.0;
    double accuracy = 0.0;
    ConfusionStats raw;
    ConfusionStats postprocessed;
};

struct NnOutcome {
    ConfusionStats confusion;
    RegressionStats regression;
    std::size_t training_samples = 0;
    std::vector<double> loss_trace;
};

/// Stage artifacts kept in memory for writing and for tests.
struct ImageArtifacts {
    GrayImage clean;
    GrayImage noisy;
    GrayImage denoised;
    LabelMask truth;
    LabelMask knn_raw;
    LabelMask knn_post;
    std::optional<LabelMask> nn_mask;
    std::optional<LabelMask> nn_truth;
    std::vector<double> nn_scores;
};

struct ImageReport {
    std::string name;
    int width = 0;
    int height = 0;
    QualityReport noisy_vs_clean;
    QualityReport denoised_vs_clean;
    std::vector<ClassFeatureMean> feature_means;
    KnnOutcome knn;
    std::optional<NnOutcome> nn;
    std::vector<std::pair<std::string, double>> timings;
};

struct RunReport {
    PipelineConfig config;
    std::vector<ImageReport> images;
};

struct RunResult {
    RunReport report;
    std::vector<ImageArtifacts> artifacts;
};

namespace detail {

template <typename F>
auto run_stage(const std::string& stage, std::vector<std::pair<std::string, double>>& timings, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            timings.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        } else {
            auto value = body();
            timings.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            return value;
        }
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

inline std::vector<ClassFeatureMean> class_feature_means(const FeatureField& field, const LabelMask& mask) {
    std::vector<ClassFeatureMean> out(static_cast<std::size_t>(mask.class_count()));
    auto labels = mask.values();
    auto features = field.values();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto& m = out[static_cast<std::size_t>(labels[i])];
        ++m.pixels;
        m.mean.contrast += features[i].contrast;
        m.mean.homogeneity += features[i].homogeneity;
        m.mean.entropy += features[i].entropy;
        m.mean.local_homogeneity += features[i].local_homogeneity;
    }
    for (std::size_t c = 0; c < out.size(); ++c) {
        auto& m = out[c];
        m.label = static_cast<int>(c);
        if (m.pixels == 0) continue;
        const auto n = static_cast<double>(m.pixels);
        m.mean.contrast /= n;
        m.mean.homogeneity /= n;
        m.mean.entropy /= n;
        m.mean.local_homogeneity /= n;
    }
    return out;
}

/// Balanced sample of inter (1) and intra (0) pixels for network training.
inline std::vector<LabeledVector> nn_training_data(std::span<const NnFeatureVector> features,
                                                   std::span<const int> labels, int per_class,
                                                   std::uint64_t seed) {
    detail::require(features.size() == labels.size(), "feature and label counts differ");
    std::vector<std::size_t> pools[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        detail::require(labels[i] == 0 || labels[i] == 1, "inter/intra labels must be 0 or 1");
        pools[labels[i]].push_back(i);
    }
    Rng rng(seed);
    std::vector<LabeledVector> data;
    for (int c = 0; c < 2; ++c) {
        auto& pool = pools[c];
        detail::require(!pool.empty(), c == 1 ? "no inter (boundary) pixels to train on" : "no intra pixels to train on");
        const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(per_class));
        rng.sample_prefix(pool, take);
        for (std::size_t i = 0; i < take; ++i) data.push_back({features[pool[i]], c});
    }
    return data;
}

}  // namespace detail

/// Loads or synthesizes one input with its labels, snapped to 8 bits.
inline std::pair<GrayImage, LabelMask> acquire_input(const InputSource& in) {
    switch (in.kind) {
        case InputKind::kPhantom: {
            auto phantom = generate_phantom(in.phantom);
            return {to_8bit_grid(phantom.image), std::move(phantom.mask)};
        }
        case InputKind::kCheckerboard: {
            const auto& c = in.checkerboard;
            return {to_8bit_grid(generate_checkerboard(c.width, c.height, c.tile, c.lo, c.hi)),
                    checkerboard_labels(c.width, c.height, c.tile)};
        }
        case InputKind::kFile: {
            GrayImage img = load_image(in.image_path);
            LabelMask mask = load_mask(in.mask_path);
            detail::require(img.width() == mask.width() && img.height() == mask.height(),
                    "image and mask dimensions differ");
            return {std::move(img), std::move(mask)};
        }
    }
    throw InvalidArgument("unknown input kind");
}

/// Segmentation stage shared by `segment`, `pipeline` and `ksweep`:
/// train on the image's own features and labels, then label every pixel.
inline LabelMask knn_segment_with_labels(const FeatureField& features, const LabelMask& labels, int k,
                                         const DistanceMetric& metric, int per_class, std::uint64_t seed) {
    KnnModel model(build_training_set(features, labels, per_class, seed), k, metric);
    return segment(features, model);
}

inline RunResult run_pipeline(const PipelineConfig& cfg) {
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw PipelineError("config", e.what());
    }
    RunResult result;
    result.report.config = cfg;
    for (const auto& source : cfg.inputs) {
        ImageReport rep;
        rep.name = source.name;
        auto& t = rep.timings;
        auto [clean, truth] = detail::run_stage("acquire", t, [&] { return acquire_input(source); });
        rep.width = clean.width();
        rep.height = clean.height();

        GrayImage noisy = detail::run_stage("speckle", t, [&] {
            return to_8bit_grid(apply_speckle(clean, cfg.speckle));
        });
        GrayImage denoised = detail::run_stage("denoise", t, [&] {
            return to_8bit_grid(denoise(noisy, cfg.frac));
        });
        detail::run_stage("quality", t, [&] {
            rep.noisy_vs_clean = quality_report(clean, noisy);
            rep.denoised_vs_clean = quality_report(clean, denoised);
        });
        FeatureField features = detail::run_stage("features", t, [&] { return feature_field(denoised, cfg.glcm); });
        rep.feature_means = detail::class_feature_means(features, truth);

        LabelMask knn_raw = detail::run_stage("segment", t, [&] {
            return knn_segment_with_labels(features, truth, cfg.knn.k, cfg.knn.metric, cfg.knn.per_class,
                                           cfg.knn.seed);
        });
        LabelMask knn_post = detail::run_stage("postprocess", t, [&] {
            detail::require(cfg.knn.foreground < truth.class_count(),
                    "foreground class " + std::to_string(cfg.knn.foreground) + " is not in the ground truth");
            return postprocess(knn_raw, cfg.knn.min_area, cfg.knn.foreground);
        });
        detail::run_stage("evaluate", t, [&] {
            rep.knn.accuracy_raw = label_agreement(knn_raw, truth);
            rep.knn.accuracy = label_agreement(knn_post, truth);
            rep.knn.raw = confusion_stats(knn_raw, truth, cfg.knn.foreground);
            rep.knn.postprocessed = confusion_stats(knn_post, truth, cfg.knn.foreground);
        });

        ImageArtifacts art{clean, noisy, denoised, truth, knn_raw, knn_post, {}, {}, {}};
        if (cfg.nn.enabled) {
            NnOutcome nn;
            const LabelMask inter = inter_intra_truth(truth);
            NnFeatureField nn_features = detail::run_stage("nn-features", t, [&] {
                return nn_feature_field(denoised, NnDescriptorConfig{cfg.nn.levels});
            });
            MlpNetwork net = detail::run_stage("nn-train", t, [&] {
                auto data = detail::nn_training_data(nn_features.values(), inter.values(), cfg.nn.per_class,
                                                     cfg.nn.sample_seed);
                nn.training_samples = data.size();
                auto trained = train(data, cfg.nn.train);
                nn.loss_trace = std::move(trained.loss_trace);
                return std::move(trained.network);
            });
            detail::run_stage("nn-classify", t, [&] {
                LabelMask mask(inter.width(), inter.height());
                std::vector<double> targets;
                art.nn_scores.reserve(inter.size());
                targets.reserve(inter.size());
                for (int y = 0; y < inter.height(); ++y) {
                    for (int x = 0; x < inter.width(); ++x) {
                        const double score = forward(net, nn_features(x, y));
                        art.nn_scores.push_back(score);
                        targets.push_back(inter(x, y));
                        mask.set(x, y, score >= 0.5 ? 1 : 0);
                    }
                }
                nn.confusion = confusion_stats(mask, inter, 1);
                nn.regression = regression_stats(art.nn_scores, targets);
                art.nn_mask = std::move(mask);
                art.nn_truth = inter;
            });
            rep.nn = std::move(nn);
        }
        result.report.images.push_back(std::move(rep));
        result.artifacts.push_back(std::move(art));
    }
    return result;
}

// ---------------------------------------------------------------- reports

inline Json to_json(const FeatureVector& f) {
    return Json{{"contrast", f.contrast},
                {"homogeneity", f.homogeneity},
                {"entropy", f.entropy},
                {"local_homogeneity", f.local_homogeneity}};
}

inline Json to_json(const RegressionStats& r) {
    return Json{{"slope", r.slope}, {"intercept", r.intercept}, {"r", r.r}};
}

namespace detail {

inline Json mean_quality(const std::vector<ImageReport>& images, QualityReport ImageReport::*member) {
    QualityReport avg;
    std::size_t lmse_count = 0;
    double lmse_sum = 0.0;
    for (const auto& img : images) {
        const QualityReport& q = img.*member;
        avg.mse += q.mse;
        avg.psnr_db += q.psnr_db;
        avg.snr_db += q.snr_db;
        avg.ssim += q.ssim;
        avg.residual_variance += q.residual_variance;
        if (q.lmse) {
            lmse_sum += *q.lmse;
            ++lmse_count;
        }
    }
    const auto n = static_cast<double>(images.size());
    avg.mse /= n;
    avg.psnr_db /= n;
    avg.snr_db /= n;
    avg.ssim /= n;
    avg.residual_variance /= n;
    if (lmse_count > 0) avg.lmse = lmse_sum / static_cast<double>(lmse_count);
    return echokit::to_json(avg);
}

inline std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace detail

/**
 * Report document. "timings" is the only member that varies between runs
 * of the same configuration.
 */
inline Json to_json(const RunReport& report) {
    Json images = Json::array();
    Json timings = Json::object();
    std::vector<std::optional<double>> knn_acc, knn_sens, knn_spec, nn_acc, nn_sens, nn_spec, nn_r;
    for (const auto& img : report.images) {
        Json classes = Json::array();
        for (const auto& m : img.feature_means) {
            Json row = to_json(m.mean);
            row["class"] = m.label;
            row["pixels"] = m.pixels;
            classes.push_back(row);
        }
        Json entry{
            {"name", img.name},
            {"width", img.width},
            {"height", img.height},
            {"quality",
             {{"noisy_vs_clean", to_json(img.noisy_vs_clean)}, {"denoised_vs_clean", to_json(img.denoised_vs_clean)}}},
            {"features", {{"class_means", classes}}},
            {"knn",
             {{"k", report.config.knn.k},
              {"metric", report.config.knn.metric.name()},
              {"positive_class", report.config.knn.foreground},
              {"accuracy_raw", img.knn.accuracy_raw},
              {"accuracy", img.knn.accuracy},
              {"raw", to_json(img.knn.raw)},
              {"postprocessed", to_json(img.knn.postprocessed)}}},
        };
        knn_acc.emplace_back(img.knn.accuracy);
        knn_sens.push_back(img.knn.postprocessed.sensitivity);
        knn_spec.push_back(img.knn.postprocessed.specificity);
        if (img.nn) {
            entry["nn"] = {{"enabled", true},
                           {"training_samples", img.nn->training_samples},
                           {"initial_loss", img.nn->loss_trace.front()},
                           {"final_loss", img.nn->loss_trace.back()},
                           {"confusion", to_json(img.nn->confusion)},
                           {"regression", to_json(img.nn->regression)}};
            nn_acc.push_back(img.nn->confusion.accuracy);
            nn_sens.push_back(img.nn->confusion.sensitivity);
            nn_spec.push_back(img.nn->confusion.specificity);
            nn_r.emplace_back(img.nn->regression.r);
        } else {
            entry["nn"] = {{"enabled", false}, {"undefined", "network stage disabled in the configuration"}};
        }
        images.push_back(entry);
        Json stage_times = Json::object();
        for (const auto& [stage, seconds] : img.timings) stage_times[stage] = seconds;
        timings[img.name] = stage_times;
    }

    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json summary{
        {"images", report.images.size()},
        {"noisy_vs_clean", detail::mean_quality(report.images, &ImageReport::noisy_vs_clean)},
        {"denoised_vs_clean", detail::mean_quality(report.images, &ImageReport::denoised_vs_clean)},
        {"knn", {{"accuracy", opt(detail::mean_of(knn_acc))},
                 {"sensitivity", opt(detail::mean_of(knn_sens))},
                 {"specificity", opt(detail::mean_of(knn_spec))}}},
    };
    if (!nn_acc.empty()) {
        summary["nn"] = {{"accuracy", opt(detail::mean_of(nn_acc))},
                         {"sensitivity", opt(detail::mean_of(nn_sens))},
                         {"specificity", opt(detail::mean_of(nn_spec))},
                         {"regression_r", opt(detail::mean_of(nn_r))}};
    } else {
        summary["nn"] = nullptr;
        summary["undefined"] = {{"nn", "network stage disabled in the configuration"}};
    }
    return Json{{"tool", "echokit"},
                {"version", kToolVersion},
                {"config", to_json(report.config)},
                {"images", images},
                {"summary", summary},
                {"timings", timings}};
}

namespace detail {

inline std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

inline std::string fmt(const std::optional<double>& v, int precision = 4) {
    return v ? fmt(*v, precision) : std::string("n/a");
}

inline std::string percent(const std::optional<double>& v) {
    return v ? fmt(*v * 100.0, 1) : std::string("n/a");
}

class TextTable {
public:
    explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    std::string render() const {
        std::vector<std::size_t> width;
        for (const auto& row : rows_) {
            width.resize(std::max(width.size(), row.size()), 0);
            for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
        }
        std::ostringstream out;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (std::size_t i = 0; i < rows_[r].size(); ++i) {
                out << (i ? "  " : "");
                if (i + 1 < rows_[r].size()) {
                    out << std::left << std::setw(static_cast<int>(width[i])) << rows_[r][i];
                } else {
                    out << rows_[r][i];
                }
            }
            out << '\n';
            if (r == 0) {
                std::size_t total = 0;
                for (auto w : width) total += w + 2;
                out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
            }
        }
        return out.str();
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace detail

/// Human-readable tables: image quality, texture features, classification.
inline std::string render_text_report(const RunReport& report) {
    using detail::fmt;
    std::ostringstream out;
    out << "echokit " << kToolVersion << " report\n\n";

    out << "Image quality against the clean input (noisy | denoised)\n";
    detail::TextTable quality({"Image", "MSE noisy", "MSE denoised", "PSNR noisy", "PSNR denoised",
                               "SSIM noisy", "SSIM denoised", "SNR denoised", "LMSE denoised",
                               "Variance denoised"});
    for (const auto& img : report.images) {
        quality.add({img.name, fmt(img.noisy_vs_clean.mse, 6), fmt(img.denoised_vs_clean.mse, 6),
                     fmt(img.noisy_vs_clean.psnr_db, 2), fmt(img.denoised_vs_clean.psnr_db, 2),
                     fmt(img.noisy_vs_clean.ssim), fmt(img.denoised_vs_clean.ssim),
                     fmt(img.denoised_vs_clean.snr_db, 2), fmt(img.denoised_vs_clean.lmse),
                     fmt(img.denoised_vs_clean.residual_variance, 6)});
    }
    out << quality.render() << '\n';

    out << "Mean GLCM features per ground-truth class\n";
    detail::TextTable features({"Image", "Class", "Contrast", "Homogeneity", "Entropy", "LH"});
    for (const auto& img : report.images) {
        for (const auto& m : img.feature_means) {
            features.add({img.name, std::to_string(m.label), fmt(m.mean.contrast), fmt(m.mean.homogeneity),
                          fmt(m.mean.entropy), fmt(m.mean.local_homogeneity)});
        }
    }
    out << features.render() << '\n';

    out << "Classification performance (%)\n";
    detail::TextTable perf({"Image", "Classifier", "Accuracy", "Sensitivity", "Specificity"});
    for (const auto& img : report.images) {
        perf.add({img.name, "KNN (k=" + std::to_string(report.config.knn.k) + ")", detail::percent(img.knn.accuracy),
                  detail::percent(img.knn.postprocessed.sensitivity),
                  detail::percent(img.knn.postprocessed.specificity)});
        if (img.nn) {
            perf.add({img.name, "NN inter/intra", detail::percent(img.nn->confusion.accuracy),
                      detail::percent(img.nn->confusion.sensitivity),
                      detail::percent(img.nn->confusion.specificity)});
        }
    }
    out << perf.render();
    for (const auto& img : report.images) {
        if (img.nn) {
            out << "\nRegression (" << img.name << "): target = " << fmt(img.nn->regression.intercept) << " + "
                << fmt(img.nn->regression.slope) << " * output, r = " << fmt(img.nn->regression.r) << '\n';
        }
    }
    return out.str();
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

}  // namespace detail

/**
 * Writes report.json, report.txt, per-stage PGM images and CSV plot data:
 *   metric_bars.csv        image,stage,metric,value
 *   feature_means.csv      image,class,pixels,contrast,homogeneity,entropy,local_homogeneity
 *   regression_points.csv  image,x,y,output,target
 *   loss_trace.csv         image,epoch,loss
 */
inline void write_run_outputs(const RunResult& run, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
    {
        auto out = detail::open_output(dir / "report.json");
        out << to_json(run.report).dump(2) << '\n';
    }
    {
        auto out = detail::open_output(dir / "report.txt");
        out << render_text_report(run.report);
    }
    auto bars = detail::open_output(dir / "metric_bars.csv");
    bars << "image,stage,metric,value\n";
    auto means = detail::open_output(dir / "feature_means.csv");
    means << "image,class,pixels,contrast,homogeneity,entropy,local_homogeneity\n";
    auto points = detail::open_output(dir / "regression_points.csv");
    points << "image,x,y,output,target\n";
    auto losses = detail::open_output(dir / "loss_trace.csv");
    losses << "image,epoch,loss\n";

    for (std::size_t i = 0; i < run.report.images.size(); ++i) {
        const auto& rep = run.report.images[i];
        const auto& art = run.artifacts[i];
        const std::string& n = rep.name;
        save_image(art.clean, dir / (n + "_clean.pgm"));
        save_image(art.noisy, dir / (n + "_noisy.pgm"));
        save_image(art.denoised, dir / (n + "_denoised.pgm"));
        const int classes = art.truth.class_count();
        save_mask(art.truth, dir / (n + "_truth.pgm"), classes);
        save_mask(art.knn_raw, dir / (n + "_knn.pgm"), classes);
        save_mask(art.knn_post, dir / (n + "_knn_post.pgm"), classes);
        if (art.nn_mask) save_mask(*art.nn_mask, dir / (n + "_nn.pgm"), 2);

        for (const auto& [stage, q] : {std::pair{"noisy", &rep.noisy_vs_clean}, std::pair{"denoised", &rep.denoised_vs_clean}}) {
            bars << n << ',' << stage << ",mse," << q->mse << '\n';
            bars << n << ',' << stage << ",psnr_db," << q->psnr_db << '\n';
            bars << n << ',' << stage << ",snr_db," << q->snr_db << '\n';
            bars << n << ',' << stage << ",ssim," << q->ssim << '\n';
            if (q->lmse) bars << n << ',' << stage << ",lmse," << *q->lmse << '\n';
            bars << n << ',' << stage << ",residual_variance," << q->residual_variance << '\n';
        }
        for (const auto& m : rep.feature_means) {
            means << n << ',' << m.label << ',' << m.pixels << ',' << m.mean.contrast << ',' << m.mean.homogeneity
                  << ',' << m.mean.entropy << ',' << m.mean.local_homogeneity << '\n';
        }
        if (rep.nn && art.nn_truth) {
            const int w = art.nn_truth->width();
            for (std::size_t p = 0; p < art.nn_scores.size(); ++p) {
                const int x = static_cast<int>(p % static_cast<std::size_t>(w));
                const int y = static_cast<int>(p / static_cast<std::size_t>(w));
                points << n << ',' << x << ',' << y << ',' << art.nn_scores[p] << ',' << (*art.nn_truth)(x, y) << '\n';
            }
            for (std::size_t e = 0; e < rep.nn->loss_trace.size(); ++e) {
                losses << n << ',' << e << ',' << rep.nn->loss_trace[e] << '\n';
            }
        }
    }
    if (!bars || !means || !points || !losses) {
        throw IoError("writing plot data under '" + dir.string() + "' failed");
    }
}

struct KSweepRow {
    std::string image;
    int k = 0;
    double accuracy_raw = 0.0;
    double accuracy = 0.0;
    ConfusionStats confusion;
};

/// Accuracy of the KNN stage for each k, everything else as in run_pipeline.
inline std::vector<KSweepRow> k_sweep(const PipelineConfig& cfg, const std::vector<int>& ks) {
    cfg.validate();
    detail::require(!ks.empty(), "k sweep needs at least one k");
    std::vector<KSweepRow> rows;
    for (const auto& source : cfg.inputs) {
        auto [clean, truth] = acquire_input(source);
        const GrayImage noisy = to_8bit_grid(apply_speckle(clean, cfg.speckle));
        const GrayImage denoised = to_8bit_grid(denoise(noisy, cfg.frac));
        const FeatureField features = feature_field(denoised, cfg.glcm);
        const TrainingSet training = build_training_set(features, truth, cfg.knn.per_class, cfg.knn.seed);
        for (int k : ks) {
            KnnModel model(training, k, cfg.knn.metric);
            const LabelMask raw = segment(features, model);
            const LabelMask post = postprocess(raw, cfg.knn.min_area, cfg.knn.foreground);
            rows.push_back({source.name, k, label_agreement(raw, truth), label_agreement(post, truth),
                            confusion_stats(post, truth, cfg.knn.foreground)});
        }
    }
    return rows;
}

}  // namespace echokit
