#include <gtest/gtest.h>

#include <chrono>
#include <csignal>
#include <sstream>

#include "raftlab/error.hpp"
#include "raftlab/exec.hpp"
#include "raftlab/process.hpp"
#include "raftlab/sim.hpp"
#include "support.hpp"

using namespace raftlab;
using raftlab::testing::TempDir;

namespace {

ExperimentPlan local_plan(const std::filesystem::path& workdir, const std::string& command,
                          const std::string& glob = "report.txt") {
  ExperimentPlan plan;
  plan.project_name = "fx";
  plan.suite_command = command;
  plan.workdir = workdir;
  plan.result_glob = glob;
  plan.runs_per_config = 3;
  plan.timeout_seconds = 30;
  ThrottleConfig base{.id = "base", .baseline = true};
  ThrottleConfig c{.id = "C"};
  c.cpu_limit = 0.5;
  plan.configs = {base, c};
  return plan;
}

// Silences "limits not enforced" chatter for the duration of a test.
struct QuietWarnings {
  std::vector<std::string> seen;
  QuietWarnings() {
    set_warning_sink([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~QuietWarnings() { set_warning_sink(nullptr); }
};

}  // namespace

TEST(Process, ReportsExitCodes) {
  ProcessSpec spec;
  spec.argv = {"/bin/sh", "-c", "exit 7"};
  EXPECT_EQ(run_process(spec).exit_code, 7);
  spec.argv = {"/bin/sh", "-c", "kill -9 $$"};
  EXPECT_EQ(run_process(spec).exit_code, 128 + SIGKILL);
}

TEST(Process, MissingProgramIsEnvironmentError) {
  ProcessSpec spec;
  spec.argv = {"/nonexistent/program"};
  EXPECT_THROW(run_process(spec), EnvironmentError);
}

TEST(Process, PassesEnvironmentAndCapturesOutput) {
  TempDir dir;
  ProcessSpec spec;
  spec.argv = {"/bin/sh", "-c", "echo \"$RAFT_X\"; pwd"};
  spec.env = {{"RAFT_X", "hello"}};
  spec.cwd = dir.path();
  spec.output_file = dir / "out.log";
  EXPECT_EQ(run_process(spec).exit_code, 0);
  const auto text = raftlab::testing::read_text(dir / "out.log");
  EXPECT_NE(text.find("hello"), std::string::npos);
  EXPECT_NE(text.find(std::filesystem::canonical(dir.path()).string()), std::string::npos);
}

TEST(Process, TimeoutKillsWholeProcessGroup) {
  TempDir dir;
  ProcessSpec spec;
  // The grandchild would touch the marker after 3 s unless the group dies.
  spec.argv = {"/bin/sh", "-c", "(sleep 3; touch marker) & trap '' TERM; sleep 30"};
  spec.cwd = dir.path();
  spec.timeout_seconds = 0.5;
  bool hook_ran = false;
  spec.on_timeout = [&] { hook_ran = true; };
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_process(spec);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_TRUE(result.timed_out);
  EXPECT_TRUE(hook_ran);
  EXPECT_LT(elapsed, 0.5 + kTerminateGraceSeconds + 1.5);
  ::sleep(4);
  EXPECT_FALSE(std::filesystem::exists(dir / "marker"));
}

TEST(FindProgram, SearchesPath) {
  EXPECT_TRUE(find_program("sh").has_value());
  EXPECT_FALSE(find_program("raftlab-no-such-program").has_value());
}

TEST(Exec, PassingSuiteGivesValidRecord) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(),
                         "printf 'PASS\\tt1\\nFAIL\\tt2\\tBoom\\n' > report.txt; echo noise");
  const auto r = run_once(plan, plan.configs[1], 4);
  EXPECT_EQ(r.project_name, "fx");
  EXPECT_EQ(r.config_id, "C");
  EXPECT_EQ(r.run_index, 4);
  EXPECT_EQ(r.validity, Validity::Valid);
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_EQ(r.outcomes[1].failure_kind, "Boom");
  EXPECT_GE(r.duration_seconds, 0.0);
  EXPECT_EQ(quiet.seen.size(), 1u);  // cpu limit declared, not enforced locally
}

TEST(Exec, OomExitWithoutReportIsCatastrophic) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(), "exit 137");
  const auto r = run_once(plan, plan.configs[0], 0);
  EXPECT_EQ(r.validity, Validity::Catastrophic);
  EXPECT_EQ(r.exit_code, 137);
  EXPECT_TRUE(r.outcomes.empty());
}

TEST(Exec, TimeoutIsCatastrophicWithinGrace) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(), "printf 'PASS\\tt\\n' > report.txt; sleep 30");
  plan.timeout_seconds = 1;
  const auto r = run_once(plan, plan.configs[0], 0);
  EXPECT_EQ(r.validity, Validity::Catastrophic);
  EXPECT_LE(r.duration_seconds, plan.timeout_seconds + kTimeoutGraceSeconds);
}

TEST(Exec, SuiteSeesRunEnvironment) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(
      dir.path(), "printf 'PASS\\t%s-%s-%s\\n' \"$RAFT_CONFIG_ID\" \"$RAFT_RUN_INDEX\" \"$RAFT_SEED\" > report.txt");
  plan.seed = 99;
  const auto r = run_once(plan, plan.configs[1], 2);
  ASSERT_EQ(r.outcomes.size(), 1u);
  EXPECT_EQ(r.outcomes[0].test_id, "C-2-99");
}

TEST(Exec, StaleReportsAreNotAttributedToTheNextRun) {
  TempDir dir;
  QuietWarnings quiet;
  raftlab::testing::write_text(dir / "report.txt", "PASS\tstale\n");
  auto plan = local_plan(dir.path(), "exit 1");
  const auto r = run_once(plan, plan.configs[0], 0);
  EXPECT_EQ(r.validity, Validity::Catastrophic);
}

TEST(Exec, PartiallyCorruptReportsStayValid) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(),
                         "mkdir -p out; printf 'PASS\\tgood\\n' > out/a.txt; "
                         "printf 'GARBAGE\\n' > out/b.txt",
                         "out/*.txt");
  const auto r = run_once(plan, plan.configs[0], 0);
  EXPECT_EQ(r.validity, Validity::Valid);
  ASSERT_EQ(r.outcomes.size(), 1u);
  EXPECT_EQ(r.outcomes[0].test_id, "good");
  bool logged = false;
  for (const auto& w : quiet.seen) logged |= w.find("b.txt") != std::string::npos;
  EXPECT_TRUE(logged);
}

TEST(Exec, CollectsJUnitReports) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(),
                         "mkdir -p reports; cat > reports/TEST-a.xml <<'EOF'\n"
                         "<testsuite><testcase classname='A' name='x'/>"
                         "<testcase classname='A' name='y'><failure message='m'/></testcase>"
                         "</testsuite>\nEOF",
                         "reports/TEST-*.xml");
  const auto r = run_once(plan, plan.configs[0], 0);
  ASSERT_EQ(r.outcomes.size(), 2u);
  EXPECT_EQ(r.outcomes[1].test_id, "A::y");
  EXPECT_EQ(r.outcomes[1].status, TestStatus::Fail);
}

TEST(Exec, MissingWorkdirIsEnvironmentError) {
  auto plan = local_plan("/nonexistent/dir", "true");
  EXPECT_THROW(run_once(plan, plan.configs[0], 0), EnvironmentError);
}

TEST(Exec, ResumeSkipsRecordedJobs) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(), "printf 'PASS\\tt\\n' > report.txt");
  ResultsLog log(dir / "log.jsonl");
  std::vector<ExecutionEvent::Kind> events;
  auto observe = [&](const ExecutionEvent& e) { events.push_back(e.kind); };
  auto first = execute_plan(plan, log, {}, observe);
  EXPECT_EQ(first.jobs_run, 6);
  EXPECT_EQ(first.jobs_skipped, 0);
  plan.runs_per_config = 4;
  ResultsLog reopened(dir / "log.jsonl");
  auto second = execute_plan(plan, reopened);
  EXPECT_EQ(second.jobs_run, 2);
  EXPECT_EQ(second.jobs_skipped, 6);
  EXPECT_EQ(read_results_log(dir / "log.jsonl").size(), 8u);
  EXPECT_EQ(std::count(events.begin(), events.end(), ExecutionEvent::Kind::Finished), 6);
}

TEST(Exec, CatastrophicRunsAreCountedNotFatal) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(),
                         "if [ \"$RAFT_CONFIG_ID\" = C ]; then exit 137; fi; "
                         "printf 'PASS\\tt\\n' > report.txt");
  ResultsLog log(dir / "log.jsonl");
  const auto s = execute_plan(plan, log);
  EXPECT_EQ(s.catastrophic_count, 3);
  EXPECT_EQ(s.catastrophic_by_config.at("C"), 3);
}

TEST(Container, MissingRuntimeIsEnvironmentError) {
  TempDir dir;
  auto plan = local_plan(dir.path(), "true");
  plan.container_image = "example/image:1";
  plan.runtime.program = "raftlab-no-such-runtime";
  EXPECT_THROW(run_once(plan, plan.configs[0], 0), EnvironmentError);
}

TEST(Container, RuntimeStartFailureIsEnvironmentError) {
  TempDir dir;
  raftlab::testing::write_text(dir / "fake-runtime", "#!/bin/sh\necho 'pull access denied' >&2\nexit 125\n");
  std::filesystem::permissions(dir / "fake-runtime", std::filesystem::perms::owner_all);
  auto plan = local_plan(dir.path(), "true");
  plan.container_image = "example/image:1";
  plan.runtime.program = (dir / "fake-runtime").string();
  EXPECT_THROW(run_once(plan, plan.configs[0], 0), EnvironmentError);
}

TEST(Container, FakeRuntimeRunsTheSuite) {
  TempDir dir;
  // Drops every option up to the image, then runs the remaining command.
  raftlab::testing::write_text(dir / "fake-runtime",
                               "#!/bin/sh\n"
                               "while [ \"$1\" != example/image:1 ]; do shift; done\n"
                               "shift\nexec \"$@\"\n");
  std::filesystem::permissions(dir / "fake-runtime", std::filesystem::perms::owner_all);
  auto plan = local_plan(dir.path(), "printf 'PASS\\tin-container\\n' > report.txt");
  plan.container_image = "example/image:1";
  plan.runtime.program = (dir / "fake-runtime").string();
  const auto r = run_once(plan, plan.configs[1], 0);
  ASSERT_EQ(r.validity, Validity::Valid);
  EXPECT_EQ(r.outcomes.at(0).test_id, "in-container");
}

TEST(Container, CommandCarriesLimits) {
  auto plan = local_plan("/work", "make test");
  plan.container_image = "img";
  ThrottleConfig c{.id = "CMD"};
  c.cpu_limit = 0.1;
  c.memory_limit_gib = 0.5;
  c.disk_limit = DiskLimit{50, 100};
  const auto argv = container_command(plan, c, 7, "raft-CMD-7");
  auto has = [&](const std::string& a) { return std::find(argv.begin(), argv.end(), a) != argv.end(); };
  EXPECT_EQ(argv.front(), "docker");
  EXPECT_TRUE(has("--cpus=0.1"));
  EXPECT_TRUE(has("--memory=536870912"));
  EXPECT_TRUE(has("--memory-swap=536870912"));
  EXPECT_TRUE(has("--device-read-iops=/dev/sda:50"));
  EXPECT_TRUE(has("--device-write-bps=/dev/sda:12500"));
  EXPECT_TRUE(has("RAFT_CONFIG_ID=CMD"));
  EXPECT_TRUE(has("RAFT_RUN_INDEX=7"));
  EXPECT_TRUE(has("make test"));
  EXPECT_TRUE(has("img"));

  ThrottleConfig base{.id = "base", .baseline = true};
  const auto plain = container_command(plan, base, 0, "n");
  for (const auto& a : plain) EXPECT_EQ(a.find("--cpus"), std::string::npos);
}

TEST(Container, ShaperCommandNeedsTemplateAndLimit) {
  auto plan = local_plan("/work", "true");
  ThrottleConfig n{.id = "N"};
  n.network_limit = NetworkLimit{1500, 512};
  EXPECT_FALSE(shaper_command(plan, n).has_value());
  plan.runtime.shaper_command = "tc-shape {iface} {down_kbps} {up_kbps}";
  EXPECT_EQ(shaper_command(plan, n), "tc-shape eth0 1500 512");
  EXPECT_FALSE(shaper_command(plan, plan.configs[0]).has_value());
}

TEST(Placeholders, UnknownNamesStayVerbatim) {
  EXPECT_EQ(expand_placeholders("{a}-{b}-{", {{"a", "1"}}), "1-{b}-{");
}

TEST(Exec, OneSuiteInFlightAtATime) {
  TempDir dir;
  QuietWarnings quiet;
  auto plan = local_plan(dir.path(),
                         "echo \"start $RAFT_CONFIG_ID-$RAFT_RUN_INDEX\" >> exec.log; sleep 0.02; "
                         "printf 'PASS\\tt\\n' > report.txt; "
                         "echo \"end $RAFT_CONFIG_ID-$RAFT_RUN_INDEX\" >> exec.log");
  ResultsLog log(dir / "log.jsonl");
  int in_flight = 0, max_in_flight = 0;
  execute_plan(plan, log, {}, [&](const ExecutionEvent& e) {
    if (e.kind == ExecutionEvent::Kind::Started) max_in_flight = std::max(max_in_flight, ++in_flight);
    if (e.kind == ExecutionEvent::Kind::Finished) --in_flight;
  });
  EXPECT_EQ(max_in_flight, 1);
  std::istringstream lines(raftlab::testing::read_text(dir / "exec.log"));
  std::string line, open;
  int count = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("start ", 0) == 0) {
      EXPECT_TRUE(open.empty()) << line << " while " << open << " runs";
      open = line.substr(6);
    } else {
      EXPECT_EQ(line.substr(4), open);
      open.clear();
      ++count;
    }
  }
  EXPECT_EQ(count, 6);
}

TEST(Exec, FixtureSuiteFailureRateMatchesItsModel) {
  TempDir dir;
  QuietWarnings quiet;
  Scenario s;
  s.project_name = "fx";
  s.configs = {ThrottleConfig{.id = "base", .baseline = true}};
  s.runs_per_config = 300;
  s.seed = 77;
  s.suite.project_name = "fx";
  s.suite.duration_model = {{"base", {}}};
  s.suite.tests = {SyntheticTest{.test_id = "ten", .fail_prob = {{"base", 0.1}}},
                   SyntheticTest{.test_id = "never", .fail_prob = {{"base", 0.0}}}};
  raftlab::testing::write_text(dir / "suite.sh", fixture_script(s));
  std::filesystem::permissions(dir / "suite.sh", std::filesystem::perms::owner_all);

  auto plan = local_plan(dir.path(), "./suite.sh > report.native", "report.native");
  plan.configs = s.configs;
  plan.runs_per_config = 300;
  plan.seed = 77;
  ResultsLog log(dir / "log.jsonl");
  const auto summary = execute_plan(plan, log);
  EXPECT_EQ(summary.jobs_run, 300);
  std::int64_t ten = 0, never = 0, valid = 0;
  for (const auto& r : read_results_log(dir / "log.jsonl")) {
    valid += r.valid();
    for (const auto& o : r.outcomes) {
      if (o.status != TestStatus::Fail) continue;
      ten += o.test_id == "ten";
      never += o.test_id == "never";
    }
  }
  EXPECT_EQ(valid, 300);
  EXPECT_EQ(never, 0);
  // central 99% of Binomial(300, 0.1)
  EXPECT_GE(ten, 17);
  EXPECT_LE(ten, 44);
}
