// Copyright 2026 The medcurate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "medcurate/cli.hpp"
#include "medcurate/corpus.hpp"
#include "medcurate/reward.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace medcurate;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "medcurate");
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string golden(const std::string& name) {
  return testutil::read_text(std::filesystem::path(MEDCURATE_GOLDEN_DIR) / name);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto corpus = testutil::make_corpus(300, 10, 20, 30, 77);
    write_corpus(corpus.records, dir_ / "raw.jsonl");
    std::vector<EvalExample> bench;
    std::vector<PredictionRecord> preds;
    for (int i = 0; i < 12; ++i) {
      const std::string id = "q" + std::to_string(i);
      bench.push_back({id, "问题" + std::to_string(i),
                       {testutil::cjk_text(20, i), testutil::cjk_text(15, i + 3)},
                       i % 3 == 0 ? "内科" : "儿科", std::nullopt});
      preds.push_back({id, testutil::cjk_text(18, i + 1)});
    }
    write_corpus(bench, dir_ / "bench.jsonl");
    write_corpus(preds, dir_ / "preds.jsonl");
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  testutil::TempDir dir_;
};

// ---- help and usage ----------------------------------------------------------

TEST(CliHelp, MatchesGoldenFiles) {
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases = {
      {{"--help"}, "help_main.txt"},       {{"curate", "--help"}, "help_curate.txt"},
      {{"score", "--help"}, "help_score.txt"}, {{"eval", "--help"}, "help_eval.txt"},
      {{"stats", "--help"}, "help_stats.txt"}, {{"compare", "--help"}, "help_compare.txt"}};
  for (const auto& [args, file] : cases) {
    const auto r = run(args);
    EXPECT_EQ(r.code, kExitOk) << file;
    EXPECT_EQ(r.out, golden(file)) << file;
  }
}

TEST(CliHelp, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "-b", "x.jsonl"}).code, kExitUsage);
  EXPECT_EQ(run({"curate", "-i", "a", "-o", "b", "--bogus"}).code, kExitUsage);
}

// ---- curate / score ------------------------------------------------------------

TEST_F(CliTest, CurateIsByteIdenticalAcrossRunsAndWorkers) {
  auto a = run({"curate", "-i", path("raw.jsonl"), "-o", path("a.jsonl"), "--scorer", "stub"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  auto b = run({"curate", "-i", path("raw.jsonl"), "-o", path("b.jsonl"), "--scorer", "stub",
                "--workers", "4", "--chunk-size", "37"});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  EXPECT_EQ(testutil::read_text(path("a.jsonl")), testutil::read_text(path("b.jsonl")));
  EXPECT_EQ(read_instructions(path("a.jsonl")).size(), 300u - 60u);
  EXPECT_NE(a.out.find("total: input 300 = output 240 + discarded 60"), std::string::npos) << a.out;
}

TEST_F(CliTest, CurateWritesStageReports) {
  auto r = run({"curate", "-i", path("raw.jsonl"), "-o", path("o.jsonl"), "--stages", "normalize,pii",
                "--report-jsonl", path("stages.jsonl"), "--report-table", path("stages.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto jsonl = testutil::read_text(path("stages.jsonl"));
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 3);
  EXPECT_NE(jsonl.find("\"stage\":\"pii\",\"input\":300,\"kept\":290,\"discarded\":10"), std::string::npos);
  EXPECT_EQ(testutil::read_text(path("stages.txt")), r.out);
}

TEST_F(CliTest, ConcatenatesMultipleInputs) {
  write_corpus(std::vector<InstructionRecord>{{"extra", "q", "", "答", Source::kGeneral, {}, {}}},
               dir_ / "more.jsonl");
  auto r = run({"curate", "-i", path("raw.jsonl"), "-i", path("more.jsonl"), "-o", path("o.jsonl"),
                "--stages", "normalize"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto out = read_instructions(path("o.jsonl"));
  ASSERT_EQ(out.size(), 301u);
  EXPECT_EQ(out.back().id, "extra");
}

TEST_F(CliTest, QualityWithoutScorerIsConfigErrorBeforeReadingInput) {
  auto r = run({"curate", "-i", path("does-not-exist.jsonl"), "-o", path("o.jsonl"), "--stages",
                "pii,quality"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("quality"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(path("o.jsonl")));
  // Default stages include scoring, which needs a backend.
  EXPECT_EQ(run({"curate", "-i", path("raw.jsonl"), "-o", path("o.jsonl")}).code, kExitUsage);
}

TEST_F(CliTest, MissingInputIsDataError) {
  auto r = run({"curate", "-i", path("nope.jsonl"), "-o", path("o.jsonl"), "--stages", "pii"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(std::filesystem::exists(path("o.jsonl")));
}

TEST_F(CliTest, MalformedLinesFailOrSkip) {
  testutil::write_text(dir_ / "bad.jsonl",
                       "{\"id\":\"a\",\"instruction\":\"q\",\"output\":\"x\"}\n{broken\n");
  auto fail = run({"curate", "-i", path("bad.jsonl"), "-o", path("o.jsonl"), "--stages", "pii"});
  EXPECT_EQ(fail.code, kExitData);
  EXPECT_NE(fail.err.find(":2"), std::string::npos) << fail.err;
  EXPECT_FALSE(std::filesystem::exists(path("o.jsonl")));
  auto skip = run({"curate", "-i", path("bad.jsonl"), "-o", path("o.jsonl"), "--stages", "pii",
                   "--on-malformed", "skip"});
  EXPECT_EQ(skip.code, kExitOk) << skip.err;
  EXPECT_EQ(read_instructions(path("o.jsonl")).size(), 1u);
}

TEST_F(CliTest, ScoreThenPrescoredQualityGate) {
  auto s = run({"score", "-i", path("raw.jsonl"), "-o", path("scored.jsonl"), "--scorer", "stub"});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  const auto scored = read_instructions(path("scored.jsonl"));
  ASSERT_EQ(scored.size(), 300u);
  for (const auto& r : scored) ASSERT_TRUE(r.score);
  auto q = run({"curate", "-i", path("scored.jsonl"), "-o", path("q.jsonl"), "--stages", "quality",
                "--prescored"});
  ASSERT_EQ(q.code, kExitOk) << q.err;
  EXPECT_EQ(read_instructions(path("q.jsonl")).size(), 270u);
}

TEST_F(CliTest, ConfigFileAndOverridesApplyInOrder) {
  testutil::write_text(dir_ / "run.conf", "stages = normalize, pii, length\nmin_tokens = 100000\n");
  auto r = run({"-c", path("run.conf"), "--set", "min_tokens=0", "curate", "-i", path("raw.jsonl"),
                "-o", path("o.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(read_instructions(path("o.jsonl")).size(), 290u);
  auto flag = run({"-c", path("run.conf"), "--set", "min_tokens=0", "curate", "-i", path("raw.jsonl"),
                   "-o", path("o2.jsonl"), "--min-tokens", "200"});
  ASSERT_EQ(flag.code, kExitOk) << flag.err;
  EXPECT_EQ(read_instructions(path("o2.jsonl")).size(), 270u);
  testutil::write_text(dir_ / "bad.conf", "colour = blue\n");
  EXPECT_EQ(run({"-c", path("bad.conf"), "stats", "-b", path("bench.jsonl")}).code, kExitUsage);
}

// ---- eval / stats / compare ------------------------------------------------------

TEST_F(CliTest, EvalWritesAllReports) {
  auto r = run({"eval", "-b", path("bench.jsonl"), "-p", path("preds.jsonl"), "--model", "demo",
                "--out", path("demo")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("BLEU-1"), std::string::npos);
  EXPECT_EQ(testutil::read_text(path("demo.table.txt")), r.out);
  for (const char* suffix : {".json", ".csv", ".examples.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(path(std::string("demo") + suffix))) << suffix;
  }
}

TEST_F(CliTest, MissingPredictionsWritesNoReport) {
  auto r = run({"eval", "-b", path("bench.jsonl"), "-p", path("absent.jsonl"), "--out", path("x")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(std::filesystem::exists(path("x.json")));
  EXPECT_FALSE(std::filesystem::exists(path("x.table.txt")));
}

TEST_F(CliTest, CoverageBelowFloorIsDataError) {
  std::vector<PredictionRecord> partial = {{"q0", "感冒"}};
  write_corpus(partial, dir_ / "partial.jsonl");
  auto r = run({"eval", "-b", path("bench.jsonl"), "-p", path("partial.jsonl"), "--json", path("p.json")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("coverage"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(path("p.json")));
  EXPECT_EQ(run({"eval", "-b", path("bench.jsonl"), "-p", path("partial.jsonl"), "--coverage-floor",
                 "0"}).code,
            kExitOk);
}

TEST_F(CliTest, RewardBackendFailureExitsThree) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  ::setenv(kRewardUrlEnv, ("http://127.0.0.1:" + std::to_string(port) + "/score").c_str(), 1);
  auto r = run({"--set", "scorer.max_attempts=1", "--set", "scorer.timeout_ms=300", "eval", "-b",
                path("bench.jsonl"), "-p", path("preds.jsonl"), "--scorer", "remote", "--reward"});
  ::unsetenv(kRewardUrlEnv);
  EXPECT_EQ(r.code, kExitBackend) << r.err;
  auto unset = run({"eval", "-b", path("bench.jsonl"), "-p", path("preds.jsonl"), "--scorer", "remote",
                    "--reward"});
  EXPECT_EQ(unset.code, kExitUsage);
  EXPECT_NE(unset.err.find(kRewardUrlEnv), std::string::npos);
}

TEST_F(CliTest, EvalWithStubReward) {
  auto r = run({"eval", "-b", path("bench.jsonl"), "-p", path("preds.jsonl"), "--scorer", "stub",
                "--reward"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("Reward"), std::string::npos);
  EXPECT_NE(r.out.find("reward=stub"), std::string::npos);
}

TEST_F(CliTest, StatsPrintsBucketsAndTotal) {
  auto r = run({"stats", "-b", path("bench.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("total: 12 questions in 2 categories"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("<1000"), std::string::npos);
  EXPECT_EQ(run({"stats", "-b", path("bench.jsonl"), "--categories", "内科", "--strict"}).code, kExitData);
}

TEST_F(CliTest, CompareReportsDeltas) {
  ASSERT_EQ(run({"eval", "-b", path("bench.jsonl"), "-p", path("preds.jsonl"), "--model", "base",
                 "--json", path("a.json")}).code,
            kExitOk);
  std::vector<PredictionRecord> better;
  for (const auto& e : read_benchmark(path("bench.jsonl"))) better.push_back({e.id, e.references[0]});
  write_corpus(better, dir_ / "better.jsonl");
  ASSERT_EQ(run({"eval", "-b", path("bench.jsonl"), "-p", path("better.jsonl"), "--model", "tuned",
                 "--json", path("b.json")}).code,
            kExitOk);
  auto r = run({"compare", path("a.json"), path("b.json"), "--csv", path("d.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("# delta = tuned - base"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(path("d.csv")));

  ASSERT_EQ(run({"eval", "-b", path("bench.jsonl"), "-p", path("preds.jsonl"), "--smoothing",
                 "add_epsilon", "--json", path("c.json")}).code,
            kExitOk);
  EXPECT_EQ(run({"compare", path("a.json"), path("c.json")}).code, kExitUsage);
  testutil::write_text(dir_ / "junk.json", "{}");
  EXPECT_EQ(run({"compare", path("a.json"), path("junk.json")}).code, kExitData);
}

}  // namespace
