#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "raftlab/exec.hpp"
#include "raftlab/report.hpp"

namespace raftlab {

/// Settings shared by analyze, cost and report.
struct AnalysisOptions {
  double alpha = 0.05;
  FdrFamily fdr_family = FdrFamily::PerTestAcrossConfigs;
  PricingTier tier = PricingTier::OnDemand;
  // Baseline id and pricing come from the plan when one is given; an
  // explicit baseline wins over the plan's.
  std::optional<std::filesystem::path> plan_path;
  std::optional<std::string> baseline_id;
};

ExecSummary cmd_run(const std::filesystem::path& plan_path,
                    const std::filesystem::path& results_path, const ExecOptions& options = {},
                    const ExecutionObserver& observer = {});

/// Writes (replacing) a results log simulated from the scenario and
/// returns the record count. `seed` overrides the scenario's.
std::int64_t cmd_simulate(const std::filesystem::path& scenario_path,
                          const std::filesystem::path& results_path,
                          std::optional<std::uint64_t> seed = std::nullopt);

/// Loads the log and builds the report model every analysis command
/// renders. Without a plan, pricing falls back to the built-in Fargate
/// table and the baseline to "baseline".
Report analyze_results(const std::filesystem::path& results_path, const AnalysisOptions& options);

std::string cmd_analyze(const std::filesystem::path& results_path, const AnalysisOptions& options);

struct CostOutput {
  std::string text;
  std::string json;
};
CostOutput cmd_cost(const std::filesystem::path& results_path, const AnalysisOptions& options);

struct ReportOutput {
  std::string text;
  std::string json;
};
/// With an output directory, also writes report.txt and report.json there.
ReportOutput cmd_report(const std::filesystem::path& results_path,
                        const std::optional<std::filesystem::path>& out_dir,
                        const AnalysisOptions& options);

/// Writes the scenario's fake suite script (mode 0755).
void cmd_fixture(const std::filesystem::path& scenario_path, const std::filesystem::path& out_path);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content,
                       bool executable = false);

}  // namespace raftlab
