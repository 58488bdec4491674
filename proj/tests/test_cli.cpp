#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "netoas/assessment.hpp"
#include "netoas/calibration.hpp"
#include "temp_dir.hpp"

using namespace netoas;
using testkit::TempDir;

namespace {

int netoas_cli(const std::string& args, const std::filesystem::path& log) {
    const std::string cmd = std::string(NETOAS_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, SimulateCalibrateRun) {
    TempDir dir;
    const auto sim = dir / "sim";
    const auto log = dir / "log.txt";
    ASSERT_EQ(netoas_cli("simulate --persona improved --placements 1 --seed 4 --out " + q(sim), log), 0) << slurp(log);
    EXPECT_TRUE(std::filesystem::exists(sim / "ground_truth.json"));
    EXPECT_TRUE(std::filesystem::exists(sim / "000001.ppm"));

    ASSERT_EQ(netoas_cli("calibrate --frame " + q(sim / "reference.ppm") + " --out " + q(dir / "calib.json"), log), 0)
        << slurp(log);
    EXPECT_NO_THROW(load_profile(dir / "calib.json"));

    ASSERT_EQ(netoas_cli("run --calib " + q(dir / "calib.json") + " --input " + q(sim) + " --seed 4 --user cli_user --users " +
                             q(dir / "users.jsonl") + " --report " + q(dir / "report.json"),
                         log),
              0)
        << slurp(log);
    std::ifstream in(dir / "report.json");
    const auto report = nlohmann::json::parse(in);
    EXPECT_EQ(report["placements"].size(), 1u);
    EXPECT_NE(slurp(log).find("Session synopsis"), std::string::npos);
    EXPECT_NE(slurp(dir / "users.jsonl").find("cli_user"), std::string::npos);
}

TEST(Cli, MissingCalibrationIsConfigError) {
    TempDir dir;
    std::filesystem::create_directories(dir / "frames");
    EXPECT_EQ(netoas_cli("run --calib " + q(dir / "none.json") + " --input " + q(dir / "frames"), dir / "log.txt"), 2);
    EXPECT_NE(slurp(dir / "log.txt").find("NotCalibrated"), std::string::npos);
}

TEST(Cli, BadArgumentsAreConfigErrors) {
    TempDir dir;
    const auto log = dir / "log.txt";
    EXPECT_EQ(netoas_cli("", log), 2);
    EXPECT_EQ(netoas_cli("frobnicate", log), 2);
    EXPECT_EQ(netoas_cli("simulate", log), 2);
    EXPECT_EQ(netoas_cli("simulate --persona expert --out " + q(dir / "x"), log), 2);
    EXPECT_EQ(netoas_cli("simulate --placements many --out " + q(dir / "x"), log), 2);
    EXPECT_EQ(netoas_cli("run --calib c.json --input in --fps 30", log), 2);
}

TEST(Cli, TrainAndRuntimeFailure) {
    TempDir dir;
    const auto log = dir / "log.txt";
    for (int i = 0; i < 8; ++i) {
        CorpusRecord r;
        r.label = i % 2 ? SkillLabel::Improved : SkillLabel::Novice;
        for (int j = 0; j < kFeatureCount; ++j) r.features[j] = (i % 2 ? 5.0 : -5.0) + 0.1 * i * j;
        append_corpus(dir / "corpus.jsonl", r);
    }
    ASSERT_EQ(netoas_cli("train --corpus " + q(dir / "corpus.jsonl") + " --out " + q(dir / "model.json"), log), 0)
        << slurp(log);
    EXPECT_NO_THROW(load_model(dir / "model.json"));

    CorpusRecord one;
    append_corpus(dir / "single.jsonl", one);
    append_corpus(dir / "single.jsonl", one);
    EXPECT_EQ(netoas_cli("train --corpus " + q(dir / "single.jsonl") + " --out " + q(dir / "m2.json"), log), 3);
}
