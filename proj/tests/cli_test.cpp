#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "test_util.hpp"

namespace ebm {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

class CliPipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_file(dir.file("config.json"),
               R"({"objective": "poisson_deviance", "outer_bags": 2, "max_rounds": 80, "learning_rate": 0.05,)"
               R"( "max_bins": 32, "interactions": 1, "smoothing_rounds": 10, "interaction_smoothing_rounds": 5})");
    ASSERT_EQ(run({"synth", "--kind", "frequency", "--rows", "1500", "--seed", "3", "--out", dir.file("d.csv"),
                   "--truth", dir.file("truth.json"), "--schema-out", dir.file("schema.json")})
                  .status,
              0);
  }

  Result train(const std::string& out, const std::string& threads = "1") {
    return run({"train", "--data", dir.file("d.csv"), "--schema", dir.file("schema.json"), "--config",
                dir.file("config.json"), "--out", out, "--threads", threads, "--log", dir.file("log.csv")});
  }

  TempDir dir;
};

TEST_F(CliPipelineTest, TrainIsByteIdenticalAcrossRunsAndThreads) {
  ASSERT_EQ(train(dir.file("m1.json")).status, 0);
  ASSERT_EQ(train(dir.file("m2.json")).status, 0);
  ASSERT_EQ(train(dir.file("m8.json"), "8").status, 0);
  const std::string m1 = read_file(dir.file("m1.json"));
  EXPECT_EQ(read_file(dir.file("m2.json")), m1);
  EXPECT_EQ(read_file(dir.file("m8.json")), m1);
  const auto model = nlohmann::json::parse(m1);
  EXPECT_EQ(model.at("meta").at("manifest").at("tool"), "ebm");
  EXPECT_EQ(model.at("meta").at("manifest").at("inputs").size(), 3u);
  EXPECT_EQ(read_file(dir.file("log.csv")).substr(0, 40).find("phase,bag,round,validation_deviance"), 0u);
}

TEST_F(CliPipelineTest, FullPipeline) {
  ASSERT_EQ(train(dir.file("m.json")).status, 0);
  const std::string m = dir.file("m.json");
  const std::string d = dir.file("d.csv");

  ASSERT_EQ(run({"predict", "--model", m, "--data", d, "--out", dir.file("p.csv")}).status, 0);
  EXPECT_EQ(line_count(read_file(dir.file("p.csv"))), 1501u);
  ASSERT_EQ(run({"predict", "--model", m, "--data", d, "--out", dir.file("p2.csv"), "--multiply-exposure"}).status, 0);

  ASSERT_EQ(run({"evaluate", "--model", m, "--data", d, "--out", dir.file("metrics.json"), "--murphy",
                 dir.file("murphy.csv"), "--histogram", dir.file("hist.csv")})
                .status,
            0);
  const auto metrics = nlohmann::json::parse(read_file(dir.file("metrics.json")));
  for (const char* key : {"rmse", "mae", "edr", "gini_norm", "n", "objective", "manifest"}) {
    EXPECT_TRUE(metrics.contains(key)) << key;
  }
  EXPECT_EQ(metrics.at("n"), 1500);
  EXPECT_GT(metrics.at("edr").get<double>(), 0.0);
  EXPECT_EQ(line_count(read_file(dir.file("murphy.csv"))), 502u);
  EXPECT_EQ(line_count(read_file(dir.file("hist.csv"))), 51u);

  EXPECT_EQ(run({"explain", "global", "--model", m, "--data", d, "--method", "shape", "--out", dir.file("i.csv")}).status, 0);
  EXPECT_EQ(run({"explain", "global", "--model", m, "--data", d, "--method", "permutation", "--seed", "2", "--out",
                 dir.file("pi.csv")})
                .status,
            0);
  EXPECT_EQ(run({"explain", "local", "--model", m, "--data", d, "--row", "4", "--out", dir.file("l.csv")}).status, 0);
  EXPECT_EQ(run({"shape", "--model", m, "--term", "age", "--out", dir.file("s.csv")}).status, 0);
  EXPECT_EQ(run({"pdp", "--model", m, "--data", d, "--feature", "age", "--ice", "5", "--out", dir.file("pdp.csv")}).status, 0);
  EXPECT_EQ(read_file(dir.file("pdp.csv")).substr(0, 19), "x,pd,ice_1,ice_2,ic");
  EXPECT_EQ(run({"interactions", "rank", "--model", m, "--data", d, "--out", dir.file("r.csv")}).status, 0);
  EXPECT_EQ(line_count(read_file(dir.file("r.csv"))), 11u);
  EXPECT_EQ(run({"monotonize", "--model", m, "--feature", "power", "--direction", "inc", "--out", dir.file("mono.json")})
                .status,
            0);
  EXPECT_EQ(run({"monotonize", "--model", m, "--feature", "region", "--direction", "inc", "--out", dir.file("x.json")})
                .status,
            2);
}

TEST_F(CliPipelineTest, EvaluatePredictionsFile) {
  // Predictions equal to the target: perfect fit.
  write_file(dir.file("t.csv"), "a,y\n1,1\n2,3\n3,2\n");
  write_file(dir.file("pr.csv"), "pred\n1\n3\n2\n");
  ASSERT_EQ(run({"schema", "infer", "--data", dir.file("t.csv"), "--out", dir.file("ts.json")}).status, 0);
  ASSERT_EQ(run({"evaluate", "--pred", dir.file("pr.csv"), "--data", dir.file("t.csv"), "--schema", dir.file("ts.json"),
                 "--out", dir.file("e.json")})
                .status,
            0);
  const auto metrics = nlohmann::json::parse(read_file(dir.file("e.json")));
  EXPECT_EQ(metrics.at("rmse").get<double>(), 0.0);
  EXPECT_EQ(metrics.at("edr").get<double>(), 1.0);
}

TEST(CliTest, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run({"bogus"}).status, 2);
  EXPECT_EQ(run({}).status, 2);
  EXPECT_EQ(run({"predict", "--model", dir.file("missing.json"), "--data", "x.csv", "--out", dir.file("p.csv")}).status, 2);
  write_file(dir.file("bad.csv"), "age,y\nold,1\n");
  write_file(dir.file("s.json"),
             R"([{"name": "age", "role": "feature", "kind": "continuous"}, {"name": "y", "role": "target", "kind": "continuous"}])");
  const auto r = run({"train", "--data", dir.file("bad.csv"), "--schema", dir.file("s.json"), "--out", dir.file("m.json")});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("bad.csv:2"), std::string::npos) << r.err;
}

TEST(CliTest, FileHashIsStable) {
  TempDir dir;
  write_file(dir.file("a.txt"), "");
  // FNV-1a 64 offset basis for empty input
  EXPECT_EQ(cli::file_hash(dir.file("a.txt")), "cbf29ce484222325");
  write_file(dir.file("b.txt"), "a");
  EXPECT_EQ(cli::file_hash(dir.file("b.txt")), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace ebm
