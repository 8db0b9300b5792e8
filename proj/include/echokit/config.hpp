#pragma once

// JSON form of the pipeline configuration. Every object is parsed strictly:
// unknown keys and wrongly typed values are errors.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echokit/error.hpp"
#include "echokit/fracfilter.hpp"
#include "echokit/glcm.hpp"
#include "echokit/knn.hpp"
#include "echokit/mlp.hpp"
#include "echokit/noise.hpp"
#include "echokit/synthetic.hpp"

namespace echokit {

using Json = nlohmann::json;

enum class InputKind { kPhantom, kCheckerboard, kFile };

struct CheckerboardSpec {
    int width = 256;
    int height = 256;
    int tile = 8;
    double lo = 0.4;
    double hi = 0.6;
};

/// One image to push through the pipeline, with its ground-truth labels.
struct InputSource {
    std::string name;
    InputKind kind = InputKind::kPhantom;
    PhantomSpec phantom;
    CheckerboardSpec checkerboard;
    std::string image_path;
    std::string mask_path;
};

struct KnnSettings {
    int k = 5;
    DistanceMetric metric = DistanceMetric::euclidean();
    int per_class = 200;
    std::uint64_t seed = 11;
    int min_area = 20;
    /// Positive class for confusion statistics and post-processing.
    int foreground = kChamber;
};

struct NnSettings {
    bool enabled = true;
    TrainConfig train;
    int per_class = 200;
    std::uint64_t sample_seed = 3;
    int levels = 16;
};

struct PipelineConfig {
    std::vector<InputSource> inputs = {InputSource{"phantom", InputKind::kPhantom, {}, {}, {}, {}}};
    SpeckleParams speckle{0.2, 5, 0.05};
    FracParams frac;
    GlcmConfig glcm;
    KnnSettings knn;
    NnSettings nn;
    std::string output_dir = "echokit-out";

    void validate() const;
};

namespace detail {

/// Reads members of one JSON object and rejects any it did not consume.
class StrictObject {
public:
    StrictObject(const Json& j, std::string where) : json_(j), where_(std::move(where)) {
        if (!json_.is_object()) {
            throw InvalidArgument(where_ + ": expected a JSON object");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = json_.find(key);
        if (it == json_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception&) {
            throw InvalidArgument(where_ + "." + key + ": wrong value type");
        }
    }

    const Json* child(const char* key) {
        seen_.insert(key);
        auto it = json_.find(key);
        return it == json_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = json_.begin(); it != json_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw InvalidArgument(where_ + ": unknown key '" + it.key() + "'");
            }
        }
    }

private:
    const Json& json_;
    std::string where_;
    std::set<std::string> seen_;
};

inline const char* input_kind_name(InputKind kind) {
    switch (kind) {
        case InputKind::kPhantom: return "phantom";
        case InputKind::kCheckerboard: return "checkerboard";
        case InputKind::kFile: return "file";
    }
    return "phantom";
}

}  // namespace detail

// ---------------------------------------------------------------- to JSON

inline Json to_json(const PhantomSpec& s) {
    return Json{{"width", s.width},           {"height", s.height},   {"center_x", s.center_x},
                {"center_y", s.center_y},     {"axis_x", s.axis_x},   {"axis_y", s.axis_y},
                {"wall_thickness", s.wall_thickness}, {"background", s.background}, {"wall", s.wall},
                {"chamber", s.chamber},       {"texture", s.texture}, {"seed", s.seed}};
}

inline Json to_json(const InputSource& in) {
    Json j{{"name", in.name}, {"kind", detail::input_kind_name(in.kind)}};
    switch (in.kind) {
        case InputKind::kPhantom: j["phantom"] = to_json(in.phantom); break;
        case InputKind::kCheckerboard:
            j["checkerboard"] = {{"width", in.checkerboard.width}, {"height", in.checkerboard.height},
                                 {"tile", in.checkerboard.tile},   {"lo", in.checkerboard.lo},
                                 {"hi", in.checkerboard.hi}};
            break;
        case InputKind::kFile:
            j["image"] = in.image_path;
            j["mask"] = in.mask_path;
            break;
    }
    return j;
}

inline Json to_json(const PipelineConfig& c) {
    Json offsets = Json::array();
    for (const auto& t : c.glcm.offsets) offsets.push_back({t.dx, t.dy});
    Json inputs = Json::array();
    for (const auto& in : c.inputs) inputs.push_back(to_json(in));
    return Json{
        {"inputs", inputs},
        {"speckle", {{"sigma", c.speckle.sigma}, {"seed", c.speckle.seed}, {"floor", c.speckle.floor}}},
        {"frac", {{"order", c.frac.order}, {"mask_size", c.frac.mask_size}, {"eps", c.frac.eps}}},
        {"glcm",
         {{"levels", c.glcm.levels},
          {"window", c.glcm.window},
          {"offsets", offsets},
          {"symmetric", c.glcm.symmetric},
          {"entropy", c.glcm.entropy == EntropyMode::kNormalized ? "normalized" : "raw"}}},
        {"knn",
         {{"k", c.knn.k},
          {"metric", c.knn.metric.name()},
          {"per_class", c.knn.per_class},
          {"seed", c.knn.seed},
          {"min_area", c.knn.min_area},
          {"foreground", c.knn.foreground}}},
        {"nn",
         {{"enabled", c.nn.enabled},
          {"learning_rate", c.nn.train.learning_rate},
          {"epochs", c.nn.train.epochs},
          {"seed", c.nn.train.seed},
          {"init_scale", c.nn.train.init_scale},
          {"per_class", c.nn.per_class},
          {"sample_seed", c.nn.sample_seed},
          {"levels", c.nn.levels}}},
        {"output_dir", c.output_dir},
    };
}

// ---------------------------------------------------------------- from JSON

inline PhantomSpec phantom_from_json(const Json& j, const std::string& where = "phantom") {
    PhantomSpec s;
    detail::StrictObject o(j, where);
    o.get("width", s.width);
    o.get("height", s.height);
    o.get("center_x", s.center_x);
    o.get("center_y", s.center_y);
    o.get("axis_x", s.axis_x);
    o.get("axis_y", s.axis_y);
    o.get("wall_thickness", s.wall_thickness);
    o.get("background", s.background);
    o.get("wall", s.wall);
    o.get("chamber", s.chamber);
    o.get("texture", s.texture);
    o.get("seed", s.seed);
    o.finish();
    s.validate();
    return s;
}

inline InputSource input_from_json(const Json& j, const std::string& where) {
    InputSource in;
    detail::StrictObject o(j, where);
    std::string kind = "phantom";
    o.get("name", in.name);
    o.get("kind", kind);
    if (kind == "phantom") {
        in.kind = InputKind::kPhantom;
        if (const Json* p = o.child("phantom")) in.phantom = phantom_from_json(*p, where + ".phantom");
    } else if (kind == "checkerboard") {
        in.kind = InputKind::kCheckerboard;
        if (const Json* p = o.child("checkerboard")) {
            detail::StrictObject c(*p, where + ".checkerboard");
            c.get("width", in.checkerboard.width);
            c.get("height", in.checkerboard.height);
            c.get("tile", in.checkerboard.tile);
            c.get("lo", in.checkerboard.lo);
            c.get("hi", in.checkerboard.hi);
            c.finish();
        }
    } else if (kind == "file") {
        in.kind = InputKind::kFile;
        o.get("image", in.image_path);
        o.get("mask", in.mask_path);
        detail::require(!in.image_path.empty() && !in.mask_path.empty(),
                        where + ": file inputs need both \"image\" and \"mask\"");
    } else {
        throw InvalidArgument(where + ".kind: unknown input kind '" + kind + "'");
    }
    o.finish();
    if (in.name.empty()) in.name = kind;
    return in;
}

inline PipelineConfig config_from_json(const Json& j) {
    PipelineConfig c;
    detail::StrictObject root(j, "config");
    if (const Json* inputs = root.child("inputs")) {
        detail::require(inputs->is_array() && !inputs->empty(), "config.inputs: expected a non-empty array");
        c.inputs.clear();
        for (std::size_t i = 0; i < inputs->size(); ++i) {
            c.inputs.push_back(input_from_json((*inputs)[i], "config.inputs[" + std::to_string(i) + "]"));
        }
    }
    if (const Json* s = root.child("speckle")) {
        detail::StrictObject o(*s, "config.speckle");
        o.get("sigma", c.speckle.sigma);
        o.get("seed", c.speckle.seed);
        o.get("floor", c.speckle.floor);
        o.finish();
    }
    if (const Json* f = root.child("frac")) {
        detail::StrictObject o(*f, "config.frac");
        o.get("order", c.frac.order);
        o.get("mask_size", c.frac.mask_size);
        o.get("eps", c.frac.eps);
        o.finish();
    }
    if (const Json* g = root.child("glcm")) {
        detail::StrictObject o(*g, "config.glcm");
        o.get("levels", c.glcm.levels);
        o.get("window", c.glcm.window);
        o.get("symmetric", c.glcm.symmetric);
        if (const Json* offs = o.child("offsets")) {
            detail::require(offs->is_array(), "config.glcm.offsets: expected an array of [dx, dy] pairs");
            c.glcm.offsets.clear();
            for (const auto& pair : *offs) {
                detail::require(pair.is_array() && pair.size() == 2 && pair[0].is_number_integer() &&
                                    pair[1].is_number_integer(),
                                "config.glcm.offsets: each offset must be [dx, dy] integers");
                c.glcm.offsets.push_back({pair[0].get<int>(), pair[1].get<int>()});
            }
        }
        std::string entropy = "normalized";
        o.get("entropy", entropy);
        if (entropy == "normalized") {
            c.glcm.entropy = EntropyMode::kNormalized;
        } else if (entropy == "raw") {
            c.glcm.entropy = EntropyMode::kRaw;
        } else {
            throw InvalidArgument("config.glcm.entropy: expected \"normalized\" or \"raw\"");
        }
        o.finish();
    }
    if (const Json* k = root.child("knn")) {
        detail::StrictObject o(*k, "config.knn");
        std::string metric = c.knn.metric.name();
        o.get("k", c.knn.k);
        o.get("metric", metric);
        o.get("per_class", c.knn.per_class);
        o.get("seed", c.knn.seed);
        o.get("min_area", c.knn.min_area);
        o.get("foreground", c.knn.foreground);
        o.finish();
        c.knn.metric = DistanceMetric::parse(metric);
    }
    if (const Json* n = root.child("nn")) {
        detail::StrictObject o(*n, "config.nn");
        o.get("enabled", c.nn.enabled);
        o.get("learning_rate", c.nn.train.learning_rate);
        o.get("epochs", c.nn.train.epochs);
        o.get("seed", c.nn.train.seed);
        o.get("init_scale", c.nn.train.init_scale);
        o.get("per_class", c.nn.per_class);
        o.get("sample_seed", c.nn.sample_seed);
        o.get("levels", c.nn.levels);
        o.finish();
    }
    root.get("output_dir", c.output_dir);
    root.finish();
    c.validate();
    return c;
}

inline void PipelineConfig::validate() const {
    detail::require(!inputs.empty(), "config needs at least one input");
    std::set<std::string> names;
    for (const auto& in : inputs) {
        detail::require(names.insert(in.name).second, "duplicate input name '" + in.name + "'");
        if (in.kind == InputKind::kPhantom) in.phantom.validate();
    }
    speckle.validate();
    frac.validate();
    glcm.validate();
    detail::require(knn.k >= 1, "knn.k must be >= 1");
    detail::require(knn.per_class >= 1, "knn.per_class must be >= 1");
    detail::require(static_cast<long long>(knn.k) <= 2LL * knn.per_class,
                    "knn.k exceeds the training set size");
    detail::require(knn.min_area >= 0, "knn.min_area must be >= 0");
    detail::require(knn.foreground >= 0, "knn.foreground must be >= 0");
    nn.train.validate();
    detail::require(nn.per_class >= 1, "nn.per_class must be >= 1");
    detail::require(nn.levels >= 2 && nn.levels <= 256, "nn.levels must be in [2,256]");
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace echokit
