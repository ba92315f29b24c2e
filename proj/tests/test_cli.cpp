/* Copyright 2026 The lmsbi Authors

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

#include "lmsbi/hash.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string output;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(LMSBI_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CliRun r;
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("lmsbi_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string p(const std::string& name) { return (dir_ / name).string(); }
  static fs::path dir_;
};

fs::path Cli::dir_;

const std::string kShort = " --steps 40 --shock-at 20";

TEST_F(Cli, VersionListsFormats) {
  const CliRun r = run("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("lmsbi 0.1.0"), std::string::npos);
  EXPECT_NE(r.output.find("LMTR v1"), std::string::npos);
  EXPECT_NE(r.output.find("LMNF v1"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("gen-market --n 0 --out " + p("x.json")).code, 2);
  EXPECT_EQ(run("gen-market --out " + p("x.json")).code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
}

TEST_F(Cli, GenMarketIsReproducible) {
  ASSERT_EQ(run("gen-market --n 12 --seed 4 --out " + p("a.json")).code, 0);
  ASSERT_EQ(run("gen-market --n 12 --seed 4 --out " + p("b.json")).code, 0);
  ASSERT_EQ(run("gen-market --n 12 --seed 5 --out " + p("c.json")).code, 0);
  EXPECT_EQ(lmsbi::sha256_file(p("a.json")), lmsbi::sha256_file(p("b.json")));
  EXPECT_NE(lmsbi::sha256_file(p("a.json")), lmsbi::sha256_file(p("c.json")));

  std::ifstream in(p("a.json.manifest.json"));
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["command"], "gen-market");
  EXPECT_EQ(m["outputs"][0]["sha256"], lmsbi::sha256_file(p("a.json")));
  EXPECT_EQ(m["parameters"]["n"], "12");
}

TEST_F(Cli, ManifestReplayReproducesOutput) {
  ASSERT_EQ(run("gen-market --n 8 --seed 9 --out " + p("r.json")).code, 0);
  const std::string before = lmsbi::sha256_file(p("r.json"));
  fs::remove(p("r.json"));
  // Output paths in the manifest are as given, so replay from the same directory.
  const CliRun r = run("--config " + p("r.json.manifest.json"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(lmsbi::sha256_file(p("r.json")), before);
}

TEST_F(Cli, InvalidValuesExitThree) {
  ASSERT_EQ(run("gen-market --n 6 --out " + p("v.json")).code, 0);
  EXPECT_EQ(run("simulate --spec " + p("v.json") + " --theta 0.5,0.01,0.5 --out " + p("v.lmtr")).code, 3);
  EXPECT_EQ(run("simulate --spec " + p("v.json") + " --theta 0.01,abc,0.5 --out " + p("v.lmtr")).code, 3);
  EXPECT_EQ(run("simulate --spec " + p("v.json") + " --steps 100 --shock-at 100 --out " + p("v.lmtr")).code, 3);
  std::ofstream(p("broken.json")) << "{\"occupations\": 3}";
  EXPECT_EQ(run("simulate --spec " + p("broken.json") + " --out " + p("v.lmtr")).code, 3);
}

TEST_F(Cli, MicroRefusalReportsEstimate) {
  ASSERT_EQ(run("gen-market --n 464 --out " + p("big.json")).code, 0);
  const CliRun r = run("simulate --spec " + p("big.json") + " --micro --sims 1000 --out " + p("big.lmtr"));
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.output.find("242.69 GiB"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(p("big.lmtr")));
}

TEST_F(Cli, InferSbcAndAnalyses) {
  ASSERT_EQ(run("gen-market --n 6 --seed 2 --out " + p("m.json")).code, 0);
  ASSERT_EQ(run("simulate --spec " + p("m.json") + kShort + " --seed 7 --out " + p("obs.lmtr")).code, 0);
  EXPECT_EQ(run("infer --spec " + p("m.json") + kShort + " --out " + p("inf")).code, 2);  // no --obs

  const std::string infer = "infer --spec " + p("m.json") + " --obs " + p("obs.lmtr") + kShort +
                            " --sims 80 --max-epochs 3 --hidden 8 --flow-layers 2 --draws 40 --out ";
  const CliRun a = run(infer + p("inf"));
  ASSERT_EQ(a.code, 0) << a.output;
  EXPECT_EQ(first_line(p("inf/samples.csv")), "delta_u,delta_v,r");
  EXPECT_TRUE(fs::exists(p("inf/posterior.lmnf")));
  ASSERT_EQ(run(infer + p("inf2")).code, 0);
  EXPECT_EQ(lmsbi::sha256_file(p("inf/samples.csv")), lmsbi::sha256_file(p("inf2/samples.csv")));
  EXPECT_EQ(lmsbi::sha256_file(p("inf/posterior.lmnf")), lmsbi::sha256_file(p("inf2/posterior.lmnf")));
  {
    std::ifstream in(p("inf/manifest.json"));
    const auto m = nlohmann::json::parse(in);
    EXPECT_EQ(m["summary_mode"], "handcrafted");
    EXPECT_EQ(m["inputs"].size(), 2u);
    EXPECT_EQ(m["outputs"].size(), 3u);
  }

  // Observation from a different market size.
  ASSERT_EQ(run("gen-market --n 7 --out " + p("m7.json")).code, 0);
  EXPECT_EQ(run("infer --spec " + p("m7.json") + " --obs " + p("obs.lmtr") + kShort + " --out " + p("bad")).code, 3);

  const CliRun s = run("sbc --spec " + p("m.json") + " --checkpoint " + p("inf/posterior.lmnf") + kShort +
                    " --trials 12 --draws 9 --bins 3 --out " + p("sbc"));
  ASSERT_EQ(s.code, 0) << s.output;
  {
    std::ifstream in(p("sbc/sbc.json"));
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["parameters"].size(), 3u);
  }

  ASSERT_EQ(run("analyze correlation --samples " + p("inf/samples.csv") + " --out " + p("corr.json")).code, 0);
  {
    std::ifstream in(p("corr.json"));
    const auto j = nlohmann::json::parse(in);
    ASSERT_EQ(j["matrix"].size(), 3u);
    for (int i = 0; i < 3; ++i) {
      ASSERT_EQ(j["matrix"][i].size(), 3u);
      EXPECT_DOUBLE_EQ(j["matrix"][i][i].get<double>(), 1.0);
    }
  }

  ASSERT_EQ(run("analyze hdr --checkpoint " + p("inf/posterior.lmnf") + " --obs " + p("obs.lmtr") +
                " --count 5 --out " + p("hdr.csv"))
                .code,
            0);
  EXPECT_EQ(first_line(p("hdr.csv")), "delta_u,delta_v,r,log_prob");

  const CliRun c = run("analyze cluster --spec " + p("m.json") + " --params " + p("hdr.csv") + kShort +
                    " --k 2 --restarts 3 --out " + p("cl.csv"));
  ASSERT_EQ(c.code, 0) << c.output;
  EXPECT_EQ(first_line(p("cl.csv")), "run,delta_u,delta_v,r,gain,loss,co_occurrence,label");
}

}  // namespace
