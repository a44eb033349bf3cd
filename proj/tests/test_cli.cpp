// Drives the built command-line tool as a subprocess.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <string>

#include "support.hpp"

using raftlab::testing::read_text;
using raftlab::testing::TempDir;
using raftlab::testing::write_text;

namespace {

struct Result {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

Result cli(const std::string& args, const std::filesystem::path& cwd = ".") {
  const std::string cmd =
      "cd " + quote(cwd.string()) + " && " + quote(RAFTLAB_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

constexpr const char* kStrong = R"({
  "project_name": "demo", "matrix": "phase1", "runs_per_config": 300, "seed": 7,
  "suite": {
    "duration_model": {"default": {"mean_seconds": 600, "jitter_fraction": 0.1}},
    "tests": [
      {"test_id": "pkg.Strong::testRace", "fail_count": {"default": 2, "C": 80}},
      {"test_id": "pkg.Stable::testOk", "fail_prob": 0.0}
    ]
  }
})";

}  // namespace

TEST(Cli, HelpListsEverySubcommand) {
  const auto r = cli("--help");
  EXPECT_EQ(r.exit_code, 0);
  for (const char* sub : {"run", "simulate", "analyze", "cost", "report", "fixture"})
    EXPECT_TRUE(contains(r.output, sub)) << sub;
  const auto sub = cli("report --help");
  EXPECT_EQ(sub.exit_code, 0);
  for (const char* flag : {"--results", "--plan", "--alpha", "--fdr-family", "--pricing", "--out"})
    EXPECT_TRUE(contains(sub.output, flag)) << flag;
  EXPECT_EQ(cli("--version").exit_code, 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").exit_code, 2);
  EXPECT_EQ(cli("frobnicate").exit_code, 2);
  EXPECT_EQ(cli("analyze").exit_code, 2);  // --results is required
  TempDir dir;
  const auto missing = cli("run --plan nope.json --results log.jsonl", dir.path());
  EXPECT_EQ(missing.exit_code, 2);
  EXPECT_TRUE(contains(missing.output, "nope.json")) << missing.output;
  write_text(dir / "bad.json", "{\"project_name\": ");
  EXPECT_EQ(cli("simulate --plan bad.json --results log.jsonl", dir.path()).exit_code, 2);
}

TEST(Cli, SimulateAnalyzeReport) {
  TempDir dir;
  write_text(dir / "scenario.json", kStrong);
  const auto sim = cli("simulate --plan scenario.json --results a.jsonl", dir.path());
  ASSERT_EQ(sim.exit_code, 0) << sim.output;
  EXPECT_TRUE(contains(sim.output, "wrote 4800 records"));
  ASSERT_EQ(cli("simulate --plan scenario.json --results b.jsonl", dir.path()).exit_code, 0);
  EXPECT_EQ(read_text(dir / "a.jsonl"), read_text(dir / "b.jsonl"));
  ASSERT_EQ(cli("simulate --plan scenario.json --results c.jsonl --seed 8", dir.path()).exit_code, 0);
  EXPECT_NE(read_text(dir / "a.jsonl"), read_text(dir / "c.jsonl"));

  const auto analyze = cli("analyze --results a.jsonl --plan scenario.json", dir.path());
  ASSERT_EQ(analyze.exit_code, 0) << analyze.output;
  EXPECT_TRUE(contains(analyze.output, "\"is_raft\": true"));

  const auto report = cli("report --results a.jsonl --plan scenario.json --out rep", dir.path());
  ASSERT_EQ(report.exit_code, 0) << report.output;
  const auto text = read_text(dir / "rep" / "report.txt");
  EXPECT_TRUE(contains(text, "pkg.Strong::testRace: significant under C;")) << text;
  EXPECT_TRUE(contains(read_text(dir / "rep" / "report.json"), "\"raftlab-report\""));
  EXPECT_EQ(cli("report --results a.jsonl --plan scenario.json --format json", dir.path()).output,
            read_text(dir / "rep" / "report.json"));
}

TEST(Cli, AnalysisFlagsAreValidated) {
  TempDir dir;
  write_text(dir / "scenario.json", kStrong);
  ASSERT_EQ(cli("simulate --plan scenario.json --results a.jsonl", dir.path()).exit_code, 0);
  EXPECT_EQ(cli("analyze --results a.jsonl --alpha 1.5", dir.path()).exit_code, 2);
  EXPECT_EQ(cli("analyze --results a.jsonl --fdr-family global", dir.path()).exit_code, 2);
  EXPECT_EQ(cli("cost --results a.jsonl --pricing reserved", dir.path()).exit_code, 2);
  EXPECT_EQ(cli("analyze --results a.jsonl --fdr-family per-project --alpha 0.01", dir.path()).exit_code,
            0);
  EXPECT_EQ(cli("analyze --results missing.jsonl", dir.path()).exit_code, 2);
}

TEST(Cli, MissingBaselineExitsThree) {
  TempDir dir;
  write_text(dir / "scenario.json", kStrong);
  ASSERT_EQ(cli("simulate --plan scenario.json --results a.jsonl", dir.path()).exit_code, 0);
  const auto r = cli("analyze --results a.jsonl --baseline aws-12", dir.path());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_TRUE(contains(r.output, "aws-12")) << r.output;
  EXPECT_TRUE(contains(r.output, "baseline")) << r.output;
}

TEST(Cli, CostUsesPlanPricing) {
  TempDir dir;
  write_text(dir / "scenario.json", R"({
    "project_name": "p2", "matrix": "phase2", "runs_per_config": 20, "seed": 1,
    "suite": {"duration_model": {"default": {"mean_seconds": 600}},
              "tests": [{"test_id": "t", "fail_prob": 0.1}]}
  })");
  ASSERT_EQ(cli("simulate --plan scenario.json --results a.jsonl", dir.path()).exit_code, 0);
  const auto text = cli("cost --results a.jsonl --plan scenario.json", dir.path());
  ASSERT_EQ(text.exit_code, 0) << text.output;
  EXPECT_TRUE(contains(text.output, "aws-04"));
  EXPECT_TRUE(contains(text.output, "0.004855")) << text.output;  // 600 s at 0.029130 $/hr
  const auto json = cli("cost --results a.jsonl --plan scenario.json --format json --pricing spot",
                        dir.path());
  ASSERT_EQ(json.exit_code, 0);
  EXPECT_TRUE(contains(json.output, "\"pricing_tier\": \"spot\"")) << json.output;
}

TEST(Cli, RunFixtureAndResume) {
  TempDir dir;
  write_text(dir / "scenario.json", R"({
    "project_name": "fx", "runs_per_config": 5, "seed": 2,
    "configs": [{"id": "base", "baseline": true}, {"id": "slow", "cpu_limit": 0.25}],
    "suite": {"tests": [{"test_id": "t", "fail_prob": {"base": 0.1, "slow": 0.6}}]}
  })");
  write_text(dir / "plan.json", R"({
    "project_name": "fx", "runs_per_config": 5, "seed": 2, "timeout_seconds": 30,
    "suite_command": "./suite.sh > report.native", "result_glob": "report.native",
    "configs": [{"id": "base", "baseline": true}, {"id": "slow", "cpu_limit": 0.25}]
  })");
  ASSERT_EQ(cli("fixture --plan scenario.json --out suite.sh", dir.path()).exit_code, 0);
  const auto first = cli("run --plan plan.json --results log.jsonl --out logs", dir.path());
  ASSERT_EQ(first.exit_code, 0) << first.output;
  EXPECT_TRUE(contains(first.output, "ran 10 jobs, 0 catastrophic")) << first.output;
  EXPECT_TRUE(std::filesystem::exists(dir / "logs" / "slow-4.log"));
  const auto again = cli("run --plan plan.json --results log.jsonl", dir.path());
  EXPECT_EQ(again.exit_code, 0);
  EXPECT_TRUE(contains(again.output, "skipped 10 jobs")) << again.output;
  EXPECT_TRUE(contains(again.output, "ran 0 jobs"));
}

TEST(Cli, EnvironmentErrorsExitOne) {
  TempDir dir;
  write_text(dir / "plan.json", R"({
    "project_name": "fx", "runs_per_config": 1, "suite_command": "true", "result_glob": "r",
    "workdir": "does-not-exist", "configs": [{"id": "base", "baseline": true}]
  })");
  EXPECT_EQ(cli("run --plan plan.json --results log.jsonl", dir.path()).exit_code, 1);
}
