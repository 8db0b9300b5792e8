#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "echokit/echokit.hpp"
#include "test_support.hpp"

using namespace echokit;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun cli(const support::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + ECHOKIT_CLI_PATH + "' " + args + " > '" + out.string() + "' 2> '" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = support::read_text(out);
    r.err = support::read_text(err);
    return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

/// Bundled config with the network off and a private output directory.
std::filesystem::path fast_config(const support::TempDir& dir) {
    Json j = Json::parse(support::read_text(std::filesystem::path(ECHOKIT_CONFIG_DIR) / "phantom.json"));
    j["nn"]["enabled"] = false;
    j["output_dir"] = (dir / "run").string();
    const auto path = dir / "fast.json";
    support::write_text(path, j.dump(2));
    return path;
}

}  // namespace

TEST(Cli, VersionAndHelp) {
    support::TempDir dir("cli");
    const CliRun v = cli(dir, "--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find(kToolVersion), std::string::npos);
    EXPECT_EQ(cli(dir, "--help").code, 0);
}

TEST(Cli, UsageErrorsExitWithOne) {
    support::TempDir dir("cli");
    EXPECT_EQ(cli(dir, "").code, 1);
    EXPECT_EQ(cli(dir, "frobnicate").code, 1);
    EXPECT_EQ(cli(dir, "phantom --out " + q(dir.path()) + " --bogus").code, 1);
    EXPECT_EQ(cli(dir, "denoise --in x.pgm").code, 1);
    EXPECT_EQ(cli(dir, "denoise --in x.pgm --out y.pgm --mask 4").code, 1);
}

TEST(Cli, RuntimeErrorsExitWithTwo) {
    support::TempDir dir("cli");
    const CliRun r = cli(dir, "denoise --in " + q(dir / "missing.pgm") + " --out " + q(dir / "o.pgm"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("missing.pgm"), std::string::npos);
    support::write_text(dir / "bad.pgm", "P5\n4 4\n255\nxx");
    EXPECT_EQ(cli(dir, "denoise --in " + q(dir / "bad.pgm") + " --out " + q(dir / "o.pgm")).code, 2);
}

TEST(Cli, EvaluateIdenticalImages) {
    support::TempDir dir("cli");
    ASSERT_EQ(cli(dir, "phantom --out " + q(dir.path())).code, 0);
    const CliRun r = cli(dir, "evaluate --ref " + q(dir / "phantom.pgm") + " --proc " + q(dir / "phantom.pgm"));
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j["psnr_db"], 99.0);
    EXPECT_EQ(j["mse"], 0.0);
    EXPECT_EQ(j["ssim"], 1.0);
}

TEST(Cli, SegmentRejectsOversizedK) {
    support::TempDir dir("cli");
    ASSERT_EQ(cli(dir, "phantom --out " + q(dir.path())).code, 0);
    const CliRun r = cli(dir, "segment --in " + q(dir / "phantom.pgm") + " --train-mask " + q(dir / "phantom_mask.pgm") +
                               " --per-class 5 --k 16 --out " + q(dir / "seg.pgm"));
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(std::filesystem::exists(dir / "seg.pgm"));
}

TEST(Cli, StagesComposeToThePipeline) {
    support::TempDir dir("cli");
    const auto cfg = fast_config(dir);
    ASSERT_EQ(cli(dir, "pipeline --config " + q(cfg)).code, 0);
    const auto run = dir / "run";

    ASSERT_EQ(cli(dir, "phantom --out " + q(dir.path())).code, 0);
    ASSERT_EQ(cli(dir, "speckle --in " + q(dir / "phantom.pgm") + " --sigma 0.2 --seed 5 --out " + q(dir / "noisy.pgm"))
                  .code,
              0);
    ASSERT_EQ(cli(dir, "denoise --in " + q(dir / "noisy.pgm") + " --order 0.5 --mask 3 --out " + q(dir / "den.pgm")).code,
              0);
    const CliRun seg = cli(dir, "segment --in " + q(dir / "den.pgm") + " --train-mask " + q(dir / "phantom_mask.pgm") +
                                 " --k 5 --foreground 2 --raw-out " + q(dir / "raw.pgm") + " --training-out " +
                                 q(dir / "train.csv") + " --out " + q(dir / "post.pgm"));
    ASSERT_EQ(seg.code, 0) << seg.err;
    const TrainingSet training = load_training_set(dir / "train.csv");
    EXPECT_EQ(training.samples.size(), 600u);
    EXPECT_EQ(training.samples.back().label, 2);

    EXPECT_EQ(support::read_text(dir / "phantom.pgm"), support::read_text(run / "phantom_clean.pgm"));
    EXPECT_EQ(support::read_text(dir / "phantom_mask.pgm"), support::read_text(run / "phantom_truth.pgm"));
    EXPECT_EQ(support::read_text(dir / "noisy.pgm"), support::read_text(run / "phantom_noisy.pgm"));
    EXPECT_EQ(support::read_text(dir / "den.pgm"), support::read_text(run / "phantom_denoised.pgm"));
    EXPECT_EQ(support::read_text(dir / "raw.pgm"), support::read_text(run / "phantom_knn.pgm"));
    EXPECT_EQ(support::read_text(dir / "post.pgm"), support::read_text(run / "phantom_knn_post.pgm"));
}

TEST(Cli, PipelineOutOverridesConfigDirectory) {
    support::TempDir dir("cli");
    const CliRun r = cli(dir, "pipeline --config " + q(fast_config(dir)) + " --out " + q(dir / "elsewhere"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "elsewhere" / "report.json"));
    EXPECT_FALSE(std::filesystem::exists(dir / "run"));
    EXPECT_NE(r.out.find("Classification performance"), std::string::npos);
}

TEST(Cli, KSweepCsv) {
    support::TempDir dir("cli");
    const CliRun r = cli(dir, "ksweep --config " + q(fast_config(dir)) + " --k 1,5 --out " + q(dir / "k.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(support::read_text(dir / "k.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "image,k,accuracy_raw,accuracy,sensitivity,specificity");
    std::getline(csv, line);
    EXPECT_EQ(line.rfind("phantom,1,", 0), 0u);
    std::getline(csv, line);
    EXPECT_EQ(line.rfind("phantom,5,", 0), 0u);
    EXPECT_FALSE(std::getline(csv, line));
    EXPECT_EQ(cli(dir, "ksweep --config " + q(fast_config(dir)) + " --k 1,x --out " + q(dir / "k.csv")).code, 1);
}

TEST(Cli, FeaturesCsv) {
    support::TempDir dir("cli");
    save_image(generate_checkerboard(16, 12, 4, 0.4, 0.6), dir / "board.pgm");
    ASSERT_EQ(cli(dir, "features --in " + q(dir / "board.pgm") + " --window 5 --out " + q(dir / "f.csv")).code, 0);
    std::istringstream csv(support::read_text(dir / "f.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "x,y,C,H,E,LH");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 16 * 12);
}

TEST(Cli, NetworkTrainingRoundTrip) {
    support::TempDir dir("cli");
    PhantomSpec spec;
    spec.width = 40;
    spec.height = 40;
    spec.center_x = 20;
    spec.center_y = 20;
    spec.axis_x = 14;
    spec.axis_y = 12;
    spec.wall_thickness = 5;
    support::write_text(dir / "spec.json", to_json(spec).dump());
    ASSERT_EQ(cli(dir, "phantom --spec " + q(dir / "spec.json") + " --out " + q(dir.path())).code, 0);
    const CliRun f = cli(dir, "nn-features --in " + q(dir / "phantom.pgm") + " --mask " + q(dir / "phantom_mask.pgm") +
                               " --out " + q(dir / "nnf.csv") + " --labels-out " + q(dir / "labels.csv"));
    ASSERT_EQ(f.code, 0) << f.err;
    const CliRun t = cli(dir, "train-nn --features " + q(dir / "nnf.csv") + " --labels " + q(dir / "labels.csv") +
                               " --epochs 4 --per-class 30 --loss-out " + q(dir / "loss.csv") + " --out " +
                               q(dir / "net.txt"));
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_NE(t.out.find("over 60 samples"), std::string::npos);
    const MlpNetwork net = load_network(dir / "net.txt");
    EXPECT_NO_THROW(net.validate());
    std::istringstream loss(support::read_text(dir / "loss.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(loss, line)) ++rows;
    EXPECT_EQ(rows, 4);

    EXPECT_EQ(cli(dir, "nn-features --in " + q(dir / "phantom.pgm") + " --out " + q(dir / "x.csv") + " --labels-out " +
                           q(dir / "y.csv"))
                  .code,
              1);
}
