#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "echokit/echokit.hpp"

namespace {

using namespace echokit;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Bad values supplied by the user; reported with the usage exit status.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_for_writing(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_double(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw CorruptFile(where + ": '" + text + "' is not a number");
}

int parse_int(const std::string& text, const std::string& where) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw CorruptFile(where + ": '" + text + "' is not an integer");
    }
    return v;
}

/// Rows of a CSV file with a header; `columns` is the expected width.
std::vector<std::vector<std::string>> read_csv(const std::string& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw CorruptFile(path + ": missing header row");
    std::vector<std::vector<std::string>> rows;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != columns) {
            throw CorruptFile(path + ":" + std::to_string(number) + ": expected " + std::to_string(columns) +
                              " columns, found " + std::to_string(cells.size()));
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

DistanceMetric parse_metric(const std::string& name) {
    try {
        return DistanceMetric::parse(name);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> ks;
    for (const auto& cell : split_csv_line(text)) {
        int k = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), k);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || k < 1) {
            throw UsageError("--k expects a comma-separated list of positive integers, got '" + text + "'");
        }
        ks.push_back(k);
    }
    if (ks.empty()) throw UsageError("--k needs at least one value");
    return ks;
}

// ------------------------------------------------------------ commands

struct PhantomArgs {
    std::string spec;
    std::string out;
};

void cmd_phantom(const PhantomArgs& a) {
    PhantomSpec spec;
    if (!a.spec.empty()) {
        std::ifstream in(a.spec);
        if (!in) throw IoError("cannot open phantom spec '" + a.spec + "'");
        Json j;
        try {
            in >> j;
        } catch (const Json::parse_error& e) {
            throw UsageError(a.spec + ": " + e.what());
        }
        spec = phantom_from_json(j);
    }
    const Phantom p = generate_phantom(spec);
    std::error_code ec;
    std::filesystem::create_directories(a.out, ec);
    const std::filesystem::path dir(a.out);
    save_image(to_8bit_grid(p.image), dir / "phantom.pgm");
    save_mask(p.mask, dir / "phantom_mask.pgm");
}

struct SpeckleArgs {
    std::string in, out;
    SpeckleParams params{0.2, 1, 0.05};
};

void cmd_speckle(const SpeckleArgs& a) {
    save_image(to_8bit_grid(apply_speckle(load_image(a.in), a.params)), a.out);
}

struct DenoiseArgs {
    std::string in, out;
    FracParams params;
};

void cmd_denoise(const DenoiseArgs& a) {
    save_image(to_8bit_grid(denoise(load_image(a.in), a.params)), a.out);
}

struct GlcmArgs {
    int levels = 16;
    int window = 9;
    std::string entropy = "normalized";

    GlcmConfig config() const {
        GlcmConfig cfg;
        cfg.levels = levels;
        cfg.window = window;
        cfg.entropy = entropy == "raw" ? EntropyMode::kRaw : EntropyMode::kNormalized;
        return cfg;
    }
};

struct FeaturesArgs {
    std::string in, out;
    GlcmArgs glcm;
};

void cmd_features(const FeaturesArgs& a) {
    const GlcmConfig cfg = a.glcm.config();
    cfg.validate();
    const FeatureField field = feature_field(load_image(a.in), cfg);
    auto out = open_for_writing(a.out);
    out << "x,y,C,H,E,LH\n";
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            const auto& f = field(x, y);
            out << x << ',' << y << ',' << f.contrast << ',' << f.homogeneity << ',' << f.entropy << ','
                << f.local_homogeneity << '\n';
        }
    }
    if (!out) throw IoError("writing '" + a.out + "' failed");
}

struct SegmentArgs {
    std::string in, train_mask, out, raw_out, training_out;
    int k = 5;
    std::string metric = "euclidean";
    GlcmArgs glcm;
    int per_class = 200;
    std::uint64_t seed = 11;
    int min_area = 20;
    int foreground = -1;
};

void cmd_segment(const SegmentArgs& a) {
    const DistanceMetric metric = parse_metric(a.metric);
    const GlcmConfig cfg = a.glcm.config();
    cfg.validate();
    const GrayImage img = load_image(a.in);
    const LabelMask truth = load_mask(a.train_mask);
    if (img.width() != truth.width() || img.height() != truth.height()) {
        throw UsageError("image and training mask dimensions differ");
    }
    const FeatureField features = feature_field(img, cfg);
    const TrainingSet training = build_training_set(features, truth, a.per_class, a.seed);
    if (!a.training_out.empty()) save_training_set(training, a.training_out);
    if (a.k < 1 || static_cast<std::size_t>(a.k) > training.samples.size()) {
        throw UsageError("--k must be in [1," + std::to_string(training.samples.size()) +
                         "] (the training set size)");
    }
    const LabelMask raw = segment(features, KnnModel(training, a.k, metric));
    const int classes = truth.class_count();
    if (!a.raw_out.empty()) save_mask(raw, a.raw_out, classes);
    if (a.foreground >= 0) {
        if (a.foreground >= classes) {
            throw UsageError("--foreground " + std::to_string(a.foreground) + " is not a class of the training mask");
        }
        save_mask(postprocess(raw, a.min_area, a.foreground), a.out, classes);
    } else {
        save_mask(raw, a.out, classes);
    }
}

struct NnFeaturesArgs {
    std::string in, out, mask, labels_out;
    int levels = 16;
};

void cmd_nn_features(const NnFeaturesArgs& a) {
    const GrayImage img = load_image(a.in);
    const NnFeatureField field = nn_feature_field(img, NnDescriptorConfig{a.levels});
    auto out = open_for_writing(a.out);
    out << "x,y";
    for (int i = 0; i < kNnInputs; ++i) out << ",f" << i;
    out << '\n';
    for (int y = 0; y < field.height(); ++y) {
        for (int x = 0; x < field.width(); ++x) {
            out << x << ',' << y;
            for (double v : field(x, y)) out << ',' << v;
            out << '\n';
        }
    }
    if (!out) throw IoError("writing '" + a.out + "' failed");
    if (!a.mask.empty()) {
        const LabelMask inter = inter_intra_truth(load_mask(a.mask));
        if (inter.width() != img.width() || inter.height() != img.height()) {
            throw UsageError("image and mask dimensions differ");
        }
        auto labels = open_for_writing(a.labels_out);
        labels << "x,y,label\n";
        for (int y = 0; y < inter.height(); ++y) {
            for (int x = 0; x < inter.width(); ++x) labels << x << ',' << y << ',' << inter(x, y) << '\n';
        }
        if (!labels) throw IoError("writing '" + a.labels_out + "' failed");
    }
}

struct TrainNnArgs {
    std::string features, labels, out, loss_out;
    TrainConfig train;
    int per_class = 0;
    std::uint64_t sample_seed = 3;
};

void cmd_train_nn(const TrainNnArgs& a) {
    a.train.validate();
    const auto feature_rows = read_csv(a.features, 2 + kNnInputs);
    const auto label_rows = read_csv(a.labels, 3);
    if (feature_rows.size() != label_rows.size()) {
        throw UsageError("features and labels have different row counts");
    }
    std::vector<NnFeatureVector> features(feature_rows.size());
    std::vector<int> labels(label_rows.size());
    for (std::size_t r = 0; r < feature_rows.size(); ++r) {
        const std::string where = a.features + " row " + std::to_string(r + 1);
        if (feature_rows[r][0] != label_rows[r][0] || feature_rows[r][1] != label_rows[r][1]) {
            throw UsageError(where + ": pixel coordinates do not match the labels file");
        }
        for (int i = 0; i < kNnInputs; ++i) {
            features[r][static_cast<std::size_t>(i)] = parse_double(feature_rows[r][static_cast<std::size_t>(2 + i)], where);
        }
        labels[r] = parse_int(label_rows[r][2], a.labels + " row " + std::to_string(r + 1));
    }
    std::vector<LabeledVector> data;
    if (a.per_class > 0) {
        data = detail::nn_training_data(features, labels, a.per_class, a.sample_seed);
    } else {
        for (std::size_t r = 0; r < features.size(); ++r) {
            if (labels[r] != 0 && labels[r] != 1) throw UsageError("labels must be 0 or 1");
            data.push_back({features[r], labels[r]});
        }
    }
    const TrainResult result = train(data, a.train);
    save_network(result.network, a.out);
    if (!a.loss_out.empty()) {
        auto out = open_for_writing(a.loss_out);
        out << "epoch,loss\n";
        for (std::size_t e = 0; e < result.loss_trace.size(); ++e) out << e << ',' << result.loss_trace[e] << '\n';
    }
    std::cout << "final loss " << result.loss_trace.back() << " over " << data.size() << " samples\n";
}

struct EvaluateArgs {
    std::string ref, proc, out;
};

void cmd_evaluate(const EvaluateArgs& a) {
    const GrayImage ref = load_image(a.ref);
    const GrayImage proc = load_image(a.proc);
    if (ref.width() != proc.width() || ref.height() != proc.height()) {
        throw UsageError("reference and processed images differ in dimensions");
    }
    const std::string text = to_json(quality_report(ref, proc)).dump(2) + "\n";
    if (a.out.empty() || a.out == "-") {
        std::cout << text;
    } else {
        auto out = open_for_writing(a.out);
        out << text;
        if (!out) throw IoError("writing '" + a.out + "' failed");
    }
}

PipelineConfig read_config(const std::string& path) {
    try {
        return load_config(path);
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

struct PipelineArgs {
    std::string config, out;
};

void cmd_pipeline(const PipelineArgs& a) {
    PipelineConfig cfg = read_config(a.config);
    if (!a.out.empty()) cfg.output_dir = a.out;
    const RunResult run = run_pipeline(cfg);
    write_run_outputs(run, cfg.output_dir);
    std::cout << render_text_report(run.report);
}

struct KSweepArgs {
    std::string config, ks, out;
};

void cmd_ksweep(const KSweepArgs& a) {
    const PipelineConfig cfg = read_config(a.config);
    const auto rows = k_sweep(cfg, parse_k_list(a.ks));
    auto out = open_for_writing(a.out);
    out << "image,k,accuracy_raw,accuracy,sensitivity,specificity\n";
    auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& r : rows) {
        out << r.image << ',' << r.k << ',' << r.accuracy_raw << ',' << r.accuracy << ','
            << opt(r.confusion.sensitivity) << ',' << opt(r.confusion.specificity) << '\n';
        std::cout << r.image << "  k=" << r.k << "  accuracy=" << r.accuracy << '\n';
    }
    if (!out) throw IoError("writing '" + a.out + "' failed");
}

void add_glcm_options(CLI::App* cmd, GlcmArgs& g) {
    cmd->add_option("--levels", g.levels, "gray levels for quantization")->check(CLI::Range(2, 256));
    cmd->add_option("--window", g.window, "odd window size in pixels")->check(CLI::Range(3, 101));
    cmd->add_option("--entropy", g.entropy, "entropy mode")->check(CLI::IsMember({"normalized", "raw"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"echokit: speckle denoising, texture segmentation and quality metrics for grayscale images"};
    app.set_version_flag("--version", std::string("echokit ") + kToolVersion);
    app.require_subcommand(1);

    PhantomArgs phantom;
    auto* c_phantom = app.add_subcommand("phantom", "generate a labelled synthetic phantom");
    c_phantom->add_option("--spec", phantom.spec, "phantom spec JSON (defaults when omitted)")->check(CLI::ExistingFile);
    c_phantom->add_option("--out", phantom.out, "output directory")->required();

    SpeckleArgs speckle;
    auto* c_speckle = app.add_subcommand("speckle", "apply multiplicative speckle noise");
    c_speckle->add_option("--in", speckle.in)->required();
    c_speckle->add_option("--sigma", speckle.params.sigma, "noise standard deviation")->required();
    c_speckle->add_option("--seed", speckle.params.seed)->required();
    c_speckle->add_option("--floor", speckle.params.floor, "lower clamp for the noise factor")->capture_default_str();
    c_speckle->add_option("--out", speckle.out)->required();

    DenoiseArgs den;
    auto* c_denoise = app.add_subcommand("denoise", "fractional integral denoising in the log domain");
    c_denoise->add_option("--in", den.in)->required();
    c_denoise->add_option("--order", den.params.order, "fractional order v")->capture_default_str();
    c_denoise->add_option("--mask", den.params.mask_size, "mask size")->check(CLI::IsMember({3, 5}));
    c_denoise->add_option("--eps", den.params.eps, "log offset")->capture_default_str();
    c_denoise->add_option("--out", den.out)->required();

    FeaturesArgs feat;
    auto* c_features = app.add_subcommand("features", "per-pixel GLCM features as CSV");
    c_features->add_option("--in", feat.in)->required();
    add_glcm_options(c_features, feat.glcm);
    c_features->add_option("--out", feat.out)->required();

    SegmentArgs seg;
    auto* c_segment = app.add_subcommand("segment", "KNN pixel segmentation trained on a label mask");
    c_segment->add_option("--in", seg.in)->required();
    c_segment->add_option("--train-mask", seg.train_mask)->required();
    c_segment->add_option("--k", seg.k, "number of neighbours")->capture_default_str();
    c_segment->add_option("--metric", seg.metric, "euclidean | chi_square | cosine | minkowski[:p]")->capture_default_str();
    add_glcm_options(c_segment, seg.glcm);
    c_segment->add_option("--per-class", seg.per_class, "training samples per class")->capture_default_str();
    c_segment->add_option("--seed", seg.seed, "sampling seed")->capture_default_str();
    c_segment->add_option("--min-area", seg.min_area, "post-processing component threshold")->capture_default_str();
    c_segment->add_option("--foreground", seg.foreground, "post-process this class (skipped when omitted)");
    c_segment->add_option("--raw-out", seg.raw_out, "also write the mask before post-processing");
    c_segment->add_option("--training-out", seg.training_out, "write the sampled training set as CSV");
    c_segment->add_option("--out", seg.out)->required();

    NnFeaturesArgs nnf;
    auto* c_nnf = app.add_subcommand("nn-features", "108-value texture descriptors per pixel as CSV");
    c_nnf->add_option("--in", nnf.in)->required();
    c_nnf->add_option("--levels", nnf.levels, "gray levels")->capture_default_str()->check(CLI::Range(2, 256));
    c_nnf->add_option("--out", nnf.out)->required();
    auto* mask_opt = c_nnf->add_option("--mask", nnf.mask, "label mask for inter/intra targets");
    c_nnf->add_option("--labels-out", nnf.labels_out, "inter/intra label CSV")->needs(mask_opt);
    mask_opt->needs("--labels-out");

    TrainNnArgs tnn;
    auto* c_train = app.add_subcommand("train-nn", "train the inter/intra pixel network");
    c_train->add_option("--features", tnn.features)->required();
    c_train->add_option("--labels", tnn.labels)->required();
    c_train->add_option("--epochs", tnn.train.epochs, "training epochs")->capture_default_str();
    c_train->add_option("--lr", tnn.train.learning_rate, "learning rate")->capture_default_str();
    c_train->add_option("--seed", tnn.train.seed, "weight initialization seed")->capture_default_str();
    c_train->add_option("--init-scale", tnn.train.init_scale, "initial weight range")->capture_default_str();
    c_train->add_option("--per-class", tnn.per_class, "balanced sample size per class (0 uses every row)")->capture_default_str();
    c_train->add_option("--sample-seed", tnn.sample_seed, "sampling seed")->capture_default_str();
    c_train->add_option("--loss-out", tnn.loss_out, "loss per epoch as CSV");
    c_train->add_option("--out", tnn.out)->required();

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "image quality metrics as JSON");
    c_eval->add_option("--ref", ev.ref)->required();
    c_eval->add_option("--proc", ev.proc)->required();
    c_eval->add_option("--out", ev.out, "output JSON (stdout when omitted)");

    PipelineArgs pipe;
    auto* c_pipe = app.add_subcommand("pipeline", "run every stage and write reports");
    c_pipe->add_option("--config", pipe.config)->required();
    c_pipe->add_option("--out", pipe.out, "output directory (overrides the config)");

    KSweepArgs sweep;
    auto* c_sweep = app.add_subcommand("ksweep", "segmentation accuracy for several k");
    c_sweep->add_option("--config", sweep.config)->required();
    c_sweep->add_option("--k", sweep.ks, "comma-separated list")->capture_default_str();
    sweep.ks = "1,3,5,7,9";
    c_sweep->add_option("--out", sweep.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*c_phantom) cmd_phantom(phantom);
        else if (*c_speckle) cmd_speckle(speckle);
        else if (*c_denoise) cmd_denoise(den);
        else if (*c_features) cmd_features(feat);
        else if (*c_segment) cmd_segment(seg);
        else if (*c_nnf) cmd_nn_features(nnf);
        else if (*c_train) cmd_train_nn(tnn);
        else if (*c_eval) cmd_evaluate(ev);
        else if (*c_pipe) cmd_pipeline(pipe);
        else if (*c_sweep) cmd_ksweep(sweep);
    } catch (const UsageError& e) {
        std::cerr << "echokit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "echokit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "echokit: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
