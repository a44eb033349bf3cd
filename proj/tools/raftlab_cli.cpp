// raftlab command-line driver. Talks to the library only through raftlab.h.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "raftlab/raftlab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPrecondition = 3;

int exit_code_for(raftlab_status s) {
  switch (s) {
    case RAFTLAB_OK: return kExitOk;
    case RAFTLAB_ERR_PRECONDITION: return kExitPrecondition;
    case RAFTLAB_ERR_ENVIRONMENT:
    case RAFTLAB_ERR_INTERNAL: return kExitFailure;
    default: return kExitUsage;
  }
}

int fail(raftlab_status s) {
  std::fprintf(stderr, "raftlab: %s: %s\n", raftlab_status_name(s), raftlab_last_error());
  return exit_code_for(s);
}

// Owns a string returned by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { raftlab_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct OptionsHandle {
  raftlab_options* p = nullptr;
  ~OptionsHandle() { raftlab_options_free(p); }
};

struct AnalysisFlags {
  std::string results;
  std::string plan;
  std::string baseline;
  double alpha = 0.05;
  std::string fdr_family = "per-test";
  std::string pricing = "ondemand";
  std::string out;
  std::string format = "text";
};

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& f) {
  cmd->add_option("--results", f.results, "Results log (JSONL)")->required();
  cmd->add_option("--plan", f.plan,
                  "Plan or scenario file supplying the baseline config and pricing");
  cmd->add_option("--baseline", f.baseline, "Baseline config id (overrides the plan's)");
  cmd->add_option("--alpha", f.alpha, "Significance level for adjusted p-values")
      ->capture_default_str();
  cmd->add_option("--fdr-family", f.fdr_family,
                  "Benjamini-Hochberg family: per-test (each test across configs) or "
                  "per-project (all tests and configs together)")
      ->check(CLI::IsMember({"per-test", "per-project"}))
      ->capture_default_str();
  cmd->add_option("--pricing", f.pricing, "Price column used to pick configs")
      ->check(CLI::IsMember({"spot", "ondemand"}))
      ->capture_default_str();
}

raftlab_status make_options(const AnalysisFlags& f, OptionsHandle& h) {
  raftlab_status s = raftlab_options_new(&h.p);
  if (s == RAFTLAB_OK) s = raftlab_options_set_alpha(h.p, f.alpha);
  if (s == RAFTLAB_OK) s = raftlab_options_set_fdr_family(h.p, f.fdr_family.c_str());
  if (s == RAFTLAB_OK) s = raftlab_options_set_pricing(h.p, f.pricing.c_str());
  if (s == RAFTLAB_OK && !f.plan.empty()) s = raftlab_options_set_plan(h.p, f.plan.c_str());
  if (s == RAFTLAB_OK && !f.baseline.empty())
    s = raftlab_options_set_baseline(h.p, f.baseline.c_str());
  return s;
}

int write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return std::cout ? kExitOk : kExitFailure;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) {
    std::fprintf(stderr, "raftlab: cannot write '%s'\n", path.c_str());
    return kExitUsage;
  }
  return kExitOk;
}

void print_progress(void*, const raftlab_run_event* e) {
  switch (e->kind) {
    case RAFTLAB_EVENT_STARTED:
      std::fprintf(stderr, "[%s #%lld] running\n", e->config_id,
                   static_cast<long long>(e->run_index));
      break;
    case RAFTLAB_EVENT_FINISHED:
      std::fprintf(stderr, "[%s #%lld] %s, exit %d, %.3f s\n", e->config_id,
                   static_cast<long long>(e->run_index), e->valid ? "valid" : "CATASTROPHIC",
                   e->exit_code, e->duration_seconds);
      break;
    case RAFTLAB_EVENT_SKIPPED:
      break;  // summarised at the end
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect resource-affected flaky tests and price CI configurations."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(raftlab_version()));

  std::string plan, results, out_dir, out_path, scenario;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Execute every config x run job of a plan");
  run->add_option("--plan", plan, "Experiment plan (JSON)")->required();
  run->add_option("--results", results, "Results log to append to; completed jobs are skipped")
      ->required();
  run->add_option("--out", out_dir, "Directory for per-run stdout/stderr logs");

  auto* sim = app.add_subcommand("simulate", "Write a synthetic results log from a scenario");
  sim->add_option("--plan", scenario, "Scenario file (plan syntax plus a suite model)")->required();
  sim->add_option("--results,--out", results, "Results log to write (replaced)")->required();
  sim->add_option("--seed", seed, "Overrides the scenario's seed");

  AnalysisFlags analyze_flags, cost_flags, report_flags;
  auto* analyze = app.add_subcommand("analyze", "Classify RAFTs; prints the verdicts document");
  add_analysis_flags(analyze, analyze_flags);
  analyze->add_option("--out", analyze_flags.out, "Write the verdicts JSON here instead of stdout");

  auto* cost = app.add_subcommand("cost", "Price and reliability of each configuration");
  add_analysis_flags(cost, cost_flags);
  cost->add_option("--out", cost_flags.out, "Write here instead of stdout");
  cost->add_option("--format", cost_flags.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  auto* report = app.add_subcommand(
      "report", "Human and machine reports; --out DIR writes report.txt and report.json");
  add_analysis_flags(report, report_flags);
  report->add_option("--out", report_flags.out, "Output directory");
  report->add_option("--format", report_flags.format, "Variant printed to stdout without --out")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  auto* fixture = app.add_subcommand(
      "fixture", "Emit a fake test-suite script that reads RAFT_SEED/RAFT_CONFIG_ID/RAFT_RUN_INDEX");
  fixture->add_option("--plan", scenario, "Scenario file")->required();
  fixture->add_option("--out", out_path, "Script to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*run) {
    raftlab_run_summary summary{};
    const raftlab_status s = raftlab_run(plan.c_str(), results.c_str(),
                                         out_dir.empty() ? nullptr : out_dir.c_str(),
                                         print_progress, nullptr, &summary);
    if (s != RAFTLAB_OK) return fail(s);
    if (summary.jobs_skipped > 0)
      std::fprintf(stderr, "skipped %lld jobs already in the results log\n",
                   static_cast<long long>(summary.jobs_skipped));
    std::fprintf(stderr, "ran %lld jobs, %lld catastrophic\n",
                 static_cast<long long>(summary.jobs_run),
                 static_cast<long long>(summary.catastrophic));
    return kExitOk;
  }

  if (*sim) {
    std::int64_t written = 0;
    const raftlab_status s = raftlab_simulate(scenario.c_str(), results.c_str(),
                                              seed ? &*seed : nullptr, &written);
    if (s != RAFTLAB_OK) return fail(s);
    std::fprintf(stderr, "wrote %lld records to %s\n", static_cast<long long>(written),
                 results.c_str());
    return kExitOk;
  }

  if (*fixture) {
    const raftlab_status s = raftlab_fixture(scenario.c_str(), out_path.c_str());
    return s == RAFTLAB_OK ? kExitOk : fail(s);
  }

  if (*analyze) {
    OptionsHandle opts;
    raftlab_status s = make_options(analyze_flags, opts);
    LibString json;
    if (s == RAFTLAB_OK) s = raftlab_analyze(analyze_flags.results.c_str(), opts.p, &json.p);
    if (s != RAFTLAB_OK) return fail(s);
    return write_output(analyze_flags.out, json.str());
  }

  if (*cost) {
    OptionsHandle opts;
    raftlab_status s = make_options(cost_flags, opts);
    LibString text, json;
    if (s == RAFTLAB_OK) s = raftlab_cost(cost_flags.results.c_str(), opts.p, &text.p, &json.p);
    if (s != RAFTLAB_OK) return fail(s);
    return write_output(cost_flags.out, cost_flags.format == "json" ? json.str() : text.str());
  }

  if (*report) {
    OptionsHandle opts;
    raftlab_status s = make_options(report_flags, opts);
    LibString text, json;
    const char* dir = report_flags.out.empty() ? nullptr : report_flags.out.c_str();
    if (s == RAFTLAB_OK)
      s = raftlab_report(report_flags.results.c_str(), dir, opts.p, &text.p, &json.p);
    if (s != RAFTLAB_OK) return fail(s);
    if (dir) {
      std::fprintf(stderr, "wrote %s/report.txt and %s/report.json\n", dir, dir);
      return kExitOk;
    }
    return write_output("", report_flags.format == "json" ? json.str() : text.str());
  }
  return kExitUsage;
}
