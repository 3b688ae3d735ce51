#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(ARGJUDGE_CLI) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("argjudge-cli-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    for (const char* f : {"pairwise.csv", "pointwise.csv", "features.csv"})
      fs::copy_file(fs::path(ARGJUDGE_DEMO_DIR) / f, dir / f);
    std::ifstream in(fs::path(ARGJUDGE_DEMO_DIR) / "config.json");
    auto cfg = nlohmann::json::parse(in);
    cfg["runs_dir"] = "runs";
    cfg["workers"] = 2;
    std::ofstream(dir / "config.json") << cfg.dump(2);
    config = (dir / "config.json").string();
  }
  void TearDown() override { fs::remove_all(dir); }

  CliResult cli(const std::string& args) { return run("-q -c " + config + " " + args); }

  fs::path dir;
  std::string config;
};

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("-c /nonexistent/config.json ingest").code, 2);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_NE(run("--version").output.find("argjudge"), std::string::npos);
}

TEST_F(CliTest, MissingUpstreamStageExitsWithThree) {
  const auto r = cli("judge");
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(CliTest, BrokenConfigExitsWithTwo) {
  std::ofstream(dir / "bad.json") << R"({"run_id": "x", "datasets": "nope"})";
  EXPECT_EQ(run("-c " + (dir / "bad.json").string() + " ingest").code, 2);
}

TEST_F(CliTest, FullMockRun) {
  for (const char* stage : {"ingest", "pair", "generate", "filter", "label", "judge", "apr", "improve prompted",
                            "improve refine", "improve tournament", "report"}) {
    const auto r = cli(stage);
    ASSERT_EQ(r.code, 0) << stage << ":\n" << r.output;
  }
  const fs::path run_dir = dir / "runs" / "demo";
  EXPECT_TRUE(fs::exists(run_dir / "manifest.json"));
  EXPECT_TRUE(fs::exists(run_dir / "config.json"));
  std::ifstream in(run_dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  for (const char* stage : {"pairs", "decisions", "filtered", "rationales", "outcomes", "scoreboards",
                            "prompted_decisions", "refined_rationales", "extended_outcomes"})
    EXPECT_TRUE(manifest["stages"][stage]["complete"].get<bool>()) << stage;

  // Completed stages are skipped on rerun; the output is unchanged.
  const auto again = cli("apr");
  EXPECT_EQ(again.code, 0);
  EXPECT_EQ(cli("apr").output, again.output);
}

TEST_F(CliTest, ShapleyOnDemoFeatures) {
  const auto r = cli("analyze --what shapley --features " + (dir / "features.csv").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("contrast > length > novelty"), std::string::npos) << r.output;
}
