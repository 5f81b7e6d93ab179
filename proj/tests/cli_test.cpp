/* Copyright 2026 The chgate Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chgate/byteio.hpp"
#include "chgate/cli.hpp"

namespace chgate {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chgate");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string ReadText(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string FirstLine(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "chgate_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.yaml") << "seed: 2\n"
                                         "output_dir: "
                                      << (dir_ / "run").string()
                                      << "\n"
                                         "network:\n  preset: desk8\n"
                                         "data:\n  kind: synthetic\n  train_size: 256\n  test_size: 128\n"
                                         "schedule:\n  epochs: 2\n  batch_size: 64\n  lr_milestones: [1]\n"
                                         "  bs_anneal_end: 1\n  l0_start: 1\n  l0_rampup_end: 2\n";
    trained_ = Cli({"train", "--config", (dir_ / "tiny.yaml").string()});
  }

  static fs::path dir_;
  static CliRun trained_;
};

fs::path CliTest::dir_;
CliRun CliTest::trained_;

TEST_F(CliTest, TrainWritesArtifacts) {
  ASSERT_EQ(trained_.code, 0) << trained_.err;
  EXPECT_NE(trained_.out.find("epoch 1 "), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "final.ckpt"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "metrics.jsonl"));
}

TEST_F(CliTest, EvalTwiceGivesIdenticalTraces) {
  ASSERT_EQ(trained_.code, 0);
  const auto ckpt = (dir_ / "run" / "final.ckpt").string();
  const auto cfg = (dir_ / "tiny.yaml").string();
  for (const char* sub : {"e1", "e2"}) {
    const auto r = Cli({"eval", "--config", cfg, "--checkpoint", ckpt, "--out", (dir_ / sub).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(read_file((dir_ / "e1" / "traces.bin").string()), read_file((dir_ / "e2" / "traces.bin").string()));
  EXPECT_EQ(ReadText(dir_ / "e1" / "eval.json"), ReadText(dir_ / "e2" / "eval.json"));
}

TEST_F(CliTest, AnalyzeWritesTheCsvSchema) {
  ASSERT_EQ(trained_.code, 0);
  const auto cfg = (dir_ / "tiny.yaml").string();
  ASSERT_EQ(Cli({"eval", "--config", cfg, "--checkpoint", (dir_ / "run" / "final.ckpt").string(), "--out",
                 (dir_ / "ev").string()})
                .code,
            0);
  const auto out = dir_ / "an";
  const auto r = Cli({"analyze", "--config", cfg, "--traces", (dir_ / "ev" / "traces.bin").string(), "--out",
                      out.string(), "--top-k", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("128 traces, 136 gates"), std::string::npos) << r.out;
  EXPECT_EQ(FirstLine(out / "gates.csv"), "layer,index,rate,label");
  EXPECT_EQ(FirstLine(out / "layers.csv"), "layer,always_on,always_off,conditional");
  EXPECT_EQ(FirstLine(out / "class_firing.csv"), "class,layer,rank,gate,rate");
  EXPECT_EQ(FirstLine(out / "mac_ranking.csv"), "kind,rank,id,macs,label");
  EXPECT_TRUE(fs::exists(out / "analysis.json"));
  std::ifstream gates(out / "gates.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(gates, l);) ++lines;
  EXPECT_EQ(lines, 137u);

  const auto bad = Cli({"analyze", "--traces", (dir_ / "ev" / "traces.bin").string(), "--thresholds", "x"});
  EXPECT_EQ(bad.code, 2);
  const auto exp = Cli({"export", "--traces", (dir_ / "ev" / "traces.bin").string(), "--metrics",
                        (dir_ / "run" / "metrics.jsonl").string(), "--out", (dir_ / "ex").string()});
  ASSERT_EQ(exp.code, 0) << exp.err;
  EXPECT_TRUE(fs::exists(dir_ / "ex" / "accuracy_vs_macs.dat"));
  EXPECT_TRUE(fs::exists(dir_ / "ex" / "gate_rates_layer7.dat"));
}

TEST_F(CliTest, BenchReportsJson) {
  ASSERT_EQ(trained_.code, 0);
  const auto r = Cli({"bench", "--config", (dir_ / "tiny.yaml").string(), "--checkpoint",
                      (dir_ / "run" / "final.ckpt").string(), "--examples", "4", "--repetitions", "1", "--warmup",
                      "1", "--out", (dir_ / "bench").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(ReadText(dir_ / "bench" / "bench.json").find("\"predictions_agree\": true"), std::string::npos);
}

TEST(CliErrorsTest, GradcheckPasses) {
  const auto r = Cli({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(CliErrorsTest, ExitCodes) {
  EXPECT_NE(Cli({}).code, 0);
  EXPECT_NE(Cli({"frobnicate"}).code, 0);
  EXPECT_NE(Cli({"train", "--config", "/nonexistent.yaml"}).code, 0);

  const auto dir = fs::temp_directory_path() / "chgate_cli_errors";
  fs::create_directories(dir);
  std::ofstream(dir / "bad.yaml") << "schedule:\n  epoch: 3\n";
  const auto bad = Cli({"train", "--config", (dir / "bad.yaml").string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("bad.yaml:2:3"), std::string::npos) << bad.err;

  std::ofstream(dir / "cifar.yaml") << "network:\n  resolution: 32\ndata:\n  kind: cifar10\n  path: "
                                    << (dir / "nothing").string() << "\n";
  const auto missing = Cli({"train", "--config", (dir / "cifar.yaml").string()});
  EXPECT_EQ(missing.code, 3) << missing.err;

  EXPECT_EQ(Cli({"eval", "--config", (dir / "bad.yaml").string()}).code, 2);
}

}  // namespace
}  // namespace chgate
