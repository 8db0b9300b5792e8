// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: echokit_acceptance <path to echokit CLI> <pipeline config>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>

#include "echokit/echokit.hpp"
#include "test_support.hpp"

using namespace echokit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string g_cli;
std::filesystem::path g_config;

std::string shell_quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

int run_cli(const std::string& args, const std::filesystem::path& stdout_path) {
    const std::string cmd = shell_quote(g_cli) + " " + args + " > " + shell_quote(stdout_path) + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string num(double v, int precision = 6) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

Outcome psnr_cap() {
    support::TempDir dir("accept1");
    save_image(to_8bit_grid(generate_phantom(PhantomSpec{}).image), dir / "a.pgm");
    const int code = run_cli("evaluate --ref " + shell_quote(dir / "a.pgm") + " --proc " + shell_quote(dir / "a.pgm"),
                             dir / "out.json");
    if (code != 0) return {false, "evaluate exited with " + std::to_string(code)};
    const Json j = Json::parse(support::read_text(dir / "out.json"));
    const double psnr = j["psnr_db"].get<double>();
    const double mse = j["mse"].get<double>();
    return {psnr == 99.0 && mse == 0.0, "psnr_db=" + num(psnr) + " mse=" + num(mse)};
}

Outcome denoiser_efficacy() {
    const CheckerboardSpec board;
    const GrayImage clean = generate_checkerboard(256, 256, 8, board.lo, board.hi);
    const GrayImage noisy = to_8bit_grid(apply_speckle(clean, SpeckleParams{0.2, 5, 0.05}));
    FracParams frac;
    frac.order = 0.5;
    frac.mask_size = 3;
    const GrayImage denoised = to_8bit_grid(denoise(noisy, frac));
    const auto qn = quality_report(clean, noisy);
    const auto qd = quality_report(clean, denoised);
    const double dpsnr = qd.psnr_db - qn.psnr_db;
    const double dssim = qd.ssim - qn.ssim;
    return {dpsnr >= 3.0 && dssim >= 0.05, "PSNR " + num(qn.psnr_db, 4) + " -> " + num(qd.psnr_db, 4) + " dB (+" +
                                               num(dpsnr, 4) + "), SSIM " + num(qn.ssim, 4) + " -> " +
                                               num(qd.ssim, 4) + " (+" + num(dssim, 4) + ")"};
}

std::vector<std::uint64_t> naive_counts(const QuantizedImage& q, Offset t, bool symmetric) {
    const int m = q.levels();
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(m) * m, 0);
    for (int y = 0; y < q.height(); ++y) {
        for (int x = 0; x < q.width(); ++x) {
            const int nx = x + t.dx, ny = y + t.dy;
            if (nx < 0 || ny < 0 || nx >= q.width() || ny >= q.height()) continue;
            ++counts[static_cast<std::size_t>(q(x, y)) * m + q(nx, ny)];
            if (symmetric) ++counts[static_cast<std::size_t>(q(nx, ny)) * m + q(x, y)];
        }
    }
    return counts;
}

Outcome glcm_oracle() {
    const std::vector<Offset> offsets{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    int compared = 0;
    for (int m : {2, 4, 8}) {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto q = support::random_quantized(8, 8, m, 1000 + seed * 7 + static_cast<std::uint64_t>(m));
            for (const auto& t : offsets) {
                for (bool sym : {true, false}) {
                    if (compute_glcm(q, t, sym).counts != naive_counts(q, t, sym)) {
                        return {false, "mismatch at m=" + std::to_string(m) + " seed=" + std::to_string(seed)};
                    }
                    ++compared;
                }
            }
        }
    }
    const std::vector<double> two_cell{0.0, 0.5, 0.5, 0.0};
    const auto f = glcm_features(2, two_cell, EntropyMode::kNormalized);
    const double err = std::max({std::abs(f.contrast - 1.0), std::abs(f.homogeneity - 0.5),
                                 std::abs(f.entropy - 0.5), std::abs(f.local_homogeneity - 0.5)});
    return {err <= 1e-12, std::to_string(compared) + " matrices equal the oracle; two-cell features C=" +
                              num(f.contrast) + " H=" + num(f.homogeneity) + " E=" + num(f.entropy) +
                              " LH=" + num(f.local_homogeneity)};
}

int reference_predict(const TrainingSet& set, int k, const DistanceMetric& metric, const std::vector<double>& raw) {
    auto scale = [&](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        for (std::size_t d = 0; d < v.size(); ++d) {
            const double span = set.feature_max[d] - set.feature_min[d];
            out[d] = span > 0.0 ? std::min(1.0, std::max(0.0, (v[d] - set.feature_min[d]) / span)) : 0.0;
        }
        return out;
    };
    const auto q = scale(raw);
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
        all.emplace_back(distance(q, scale(set.samples[i].features), metric), i);
    }
    std::sort(all.begin(), all.end());
    std::map<int, std::pair<int, double>> tally;
    for (int r = 0; r < k; ++r) {
        auto& [votes, sum] = tally[set.samples[all[static_cast<std::size_t>(r)].second].label];
        ++votes;
        sum += all[static_cast<std::size_t>(r)].first;
    }
    std::vector<std::tuple<int, double, int>> ranking;
    for (const auto& [label, vs] : tally) ranking.emplace_back(-vs.first, vs.second / vs.first, label);
    std::sort(ranking.begin(), ranking.end());
    return std::get<2>(ranking.front());
}

Outcome knn_oracle() {
    const std::vector<DistanceMetric> metrics{DistanceMetric::euclidean(), DistanceMetric::chi_square(),
                                              DistanceMetric::cosine(), DistanceMetric::minkowski(3.0)};
    const std::vector<int> ks{1, 3, 5, 15};
    Rng rng(2718);
    int queries = 0;
    int mismatches = 0;
    for (int round = 0; round < 500; ++round) {
        std::vector<Sample> samples;
        for (int i = 0; i < 40; ++i) {
            std::vector<double> f(4);
            for (double& v : f) v = rng.uniform(-1.0, 3.0);
            samples.push_back({f, static_cast<int>(rng.below(3))});
        }
        const auto set = TrainingSet::from_samples(std::move(samples));
        std::vector<double> query(4);
        for (double& v : query) v = rng.uniform(-1.5, 3.5);
        const auto& metric = metrics[static_cast<std::size_t>(round) % metrics.size()];
        for (int k : ks) {
            if (KnnModel(set, k, metric).predict(query).label != reference_predict(set, k, metric, query)) ++mismatches;
        }
        ++queries;
    }

    // Ties: duplicated samples straddling the k-th rank, and split votes.
    int tie_cases = 0;
    const auto check = [&](const TrainingSet& set, int k, const DistanceMetric& m, const std::vector<double>& query,
                           int expected) {
        const int got = KnnModel(set, k, m).predict(query).label;
        if (got != expected || got != reference_predict(set, k, m, query)) ++mismatches;
        ++tie_cases;
    };
    for (const auto& m : metrics) {
        const auto dup = TrainingSet::from_samples(
            {{{0.0, 1.0}, 0}, {{1.0, 0.0}, 3}, {{0.5, 0.5}, 2}, {{0.5, 0.5}, 1}, {{1.0, 1.0}, 1}});
        check(dup, 1, m, {0.5, 0.5}, 2);
        const auto split = TrainingSet::from_samples({{{0.0, 0.0}, 1}, {{1.0, 1.0}, 0}, {{0.2, 0.2}, 2}, {{0.8, 0.8}, 2}});
        check(split, 4, m, {0.5, 0.5}, 2);
        const auto even = TrainingSet::from_samples({{{0.0, 1.0}, 1}, {{1.0, 0.0}, 0}, {{0.1, 0.9}, 1}, {{0.9, 0.1}, 0}});
        check(even, 4, m, {0.5, 0.5}, reference_predict(even, 4, m, {0.5, 0.5}));
    }
    {
        const auto sym = TrainingSet::from_samples({{{0.0}, 2}, {{1.0}, 1}});
        check(sym, 2, DistanceMetric::euclidean(), {0.5}, 1);
    }
    return {mismatches == 0 && tie_cases >= 10,
            std::to_string(queries) + " random queries x " + std::to_string(ks.size()) + " k values, " +
                std::to_string(tie_cases) + " tie cases, " + std::to_string(mismatches) + " mismatches"};
}

Outcome gradient_check_outcome() {
    double worst = 0.0;
    std::size_t params = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto net = MlpNetwork::initialized(seed, 0.1);
        Rng rng(seed + 100);
        std::vector<LabeledVector> data(8);
        for (auto& s : data) {
            for (double& v : s.features) v = rng.uniform01();
            s.label = static_cast<int>(rng.below(2));
        }
        GradientCheckOptions opts;
        opts.parameters = 64;
        opts.seed = seed;
        worst = std::max(worst, gradient_check(net, data, opts));
        params += opts.parameters;
    }
    return {worst <= 1e-5, "max relative error " + num(worst, 3) + " over " + std::to_string(params) +
                               " parameters at 3 seeds"};
}

Outcome segmentation_quality(const Json& report) {
    const Json& knn = report["images"][0]["knn"];
    const double acc = knn["accuracy"].get<double>();
    const Json& post = knn["postprocessed"];
    const bool reported = post["sensitivity"].is_number() && post["specificity"].is_number();
    const int w = report["images"][0]["width"].get<int>();
    const int h = report["images"][0]["height"].get<int>();
    return {acc >= 0.85 && reported && w == 128 && h == 128,
            std::to_string(w) + "x" + std::to_string(h) + " phantom accuracy=" + num(acc, 4) +
                " sensitivity=" + post["sensitivity"].dump() + " specificity=" + post["specificity"].dump()};
}

Outcome regression_identity() {
    std::vector<double> x, y;
    for (int i = 0; i < 50; ++i) {
        x.push_back(0.02 * i);
        y.push_back(0.25 + 1.5 * 0.02 * i);
    }
    const auto id = regression_stats(x, x);
    const auto lin = regression_stats(x, y);
    const double err = std::max({std::abs(id.slope - 1.0), std::abs(id.intercept), std::abs(id.r - 1.0),
                                 std::abs(lin.slope - 1.5), std::abs(lin.intercept - 0.25), std::abs(lin.r - 1.0)});
    return {err <= 1e-12, "slope=" + num(lin.slope, 15) + " intercept=" + num(lin.intercept, 15) +
                              " r=" + num(lin.r, 15) + " max error " + num(err, 3)};
}

Json strip_timings(Json j) {
    j.erase("timings");
    for (auto& img : j["images"]) img.erase("timings");
    return j;
}

Outcome determinism(const std::filesystem::path& first, const std::filesystem::path& second) {
    const Json a = strip_timings(Json::parse(support::read_text(first / "report.json")));
    const Json b = strip_timings(Json::parse(support::read_text(second / "report.json")));
    std::vector<std::string> differing;
    if (a.dump() != b.dump()) differing.push_back("report.json");
    for (const auto& entry : std::filesystem::directory_iterator(first)) {
        const auto name = entry.path().filename().string();
        if (name == "report.json") continue;
        if (support::read_text(entry.path()) != support::read_text(second / name)) differing.push_back(name);
    }
    std::string detail = differing.empty() ? "report.json (timings excluded) and every other output identical"
                                           : "differs:";
    for (const auto& d : differing) detail += " " + d;
    return {differing.empty(), detail};
}

Outcome entropy_normalization() {
    Rng rng(99);
    double lo = 1.0, hi = 0.0;
    bool iff = true;
    for (int n = 0; n < 1000; ++n) {
        const int m = 2 + static_cast<int>(rng.below(15));
        std::vector<double> p(static_cast<std::size_t>(m) * m, 0.0);
        const std::size_t support = 1 + rng.below(p.size());
        double total = 0.0;
        for (std::size_t i = 0; i < support; ++i) {
            const double v = rng.uniform01() + 1e-3;
            p[rng.below(p.size())] += v;
            total += v;
        }
        for (double& v : p) v /= total;
        const std::size_t nonzero = static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v > 0; }));
        const double e = glcm_features(m, p, EntropyMode::kNormalized).entropy;
        lo = std::min(lo, e);
        hi = std::max(hi, e);
        if ((e == 0.0) != (nonzero == 1)) iff = false;
    }
    for (int m : {2, 5, 16}) {
        std::vector<double> single(static_cast<std::size_t>(m) * m, 0.0);
        single[static_cast<std::size_t>(m) + 1] = 1.0;
        if (glcm_features(m, single, EntropyMode::kNormalized).entropy != 0.0) iff = false;
    }
    double uniform_err = 0.0;
    for (int m : {2, 3, 8, 16, 64}) {
        const std::vector<double> u(static_cast<std::size_t>(m) * m, 1.0 / (m * m));
        uniform_err = std::max(uniform_err, std::abs(glcm_features(m, u, EntropyMode::kNormalized).entropy - 1.0));
    }
    return {lo >= 0.0 && hi <= 1.0 && iff && uniform_err <= 1e-12,
            "1000 random matrices in [" + num(lo + 0.0, 4) + ", " + num(hi, 4) + "], zero iff single-cell: " +
                (iff ? "yes" : "no") + ", uniform error " + num(uniform_err, 3)};
}

Outcome fractional_coefficients() {
    double worst = 0.0;
    for (double v : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        const auto w = gl_coefficients(v, 33);
        for (int k = 0; k <= 32; ++k) {
            const double closed = std::exp(std::lgamma(k + v) - std::lgamma(v) - std::lgamma(k + 1.0));
            worst = std::max(worst, std::abs(w[static_cast<std::size_t>(k)] - closed) / std::abs(closed));
        }
    }
    const auto ones = gl_coefficients(1.0, 33);
    const bool all_ones = std::all_of(ones.begin(), ones.end(), [](double x) { return x == 1.0; });
    return {worst <= 1e-10 && all_ones,
            "max relative error " + num(worst, 3) + " for k<=32 at 5 orders; v=1 all ones: " + (all_ones ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: echokit_acceptance <echokit cli> <pipeline config>\n";
        return 2;
    }
    g_cli = argv[1];
    g_config = argv[2];

    support::TempDir work("acceptance");
    const auto run_dir = work / "run";
    const auto run_a = work / "run-a";
    const auto run_b = work / "run-b";
    double pipeline_seconds = 0.0;
    int pipeline_code = -1;

    int failures = 0;
    const auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        return secs;
    };

    report(1, "psnr cap identity", psnr_cap);
    report(2, "denoiser efficacy", denoiser_efficacy);
    report(3, "glcm oracle", glcm_oracle);
    report(4, "knn oracle", knn_oracle);
    report(5, "mlp gradient check", gradient_check_outcome);
    report(6, "segmentation quality", [&]() -> Outcome {
        const auto t0 = std::chrono::steady_clock::now();
        pipeline_code = run_cli("pipeline --config " + shell_quote(g_config) + " --out " + shell_quote(run_dir), work / "a.log");
        pipeline_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (pipeline_code != 0) return {false, "pipeline exited with " + std::to_string(pipeline_code)};
        std::filesystem::rename(run_dir, run_a);
        Outcome o = segmentation_quality(Json::parse(support::read_text(run_a / "report.json")));
        o.detail += ", pipeline " + num(pipeline_seconds, 3) + " s (limit 60 s)";
        o.pass = o.pass && pipeline_seconds < 60.0;
        return o;
    });
    report(7, "regression identity", regression_identity);
    report(8, "determinism", [&]() -> Outcome {
        if (pipeline_code != 0) return {false, "first pipeline run failed"};
        const auto t0 = std::chrono::steady_clock::now();
        const int code = run_cli("pipeline --config " + shell_quote(g_config) + " --out " + shell_quote(run_dir), work / "b.log");
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (code != 0) return {false, "second pipeline run exited with " + std::to_string(code)};
        std::filesystem::rename(run_dir, run_b);
        Outcome o = determinism(run_a, run_b);
        o.pass = o.pass && secs < 2.0 * std::max(pipeline_seconds, 60.0);
        return o;
    });
    report(9, "entropy normalization", entropy_normalization);
    report(10, "fractional coefficients", fractional_coefficients);

    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
