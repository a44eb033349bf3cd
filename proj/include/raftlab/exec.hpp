#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raftlab/plan.hpp"
#include "raftlab/records.hpp"
#include "raftlab/results_log.hpp"

namespace raftlab {

/// Slack allowed on top of timeout_seconds when checking run durations.
inline constexpr double kTimeoutGraceSeconds = 5.0;

struct ExecOptions {
  // Per-run stdout/stderr files land here as "<config>-<run>.log".
  std::optional<std::filesystem::path> output_dir;
  // Emit the "limits declared but not enforced" warning from run_once.
  bool warn_unenforced = true;
};

struct ExecutionEvent {
  enum class Kind { Started, Finished, Skipped };
  Kind kind;
  std::string config_id;
  std::int64_t run_index;
  std::chrono::steady_clock::time_point at;
  const RunRecord* record = nullptr;  // Finished only
};

using ExecutionObserver = std::function<void(const ExecutionEvent&)>;

struct ExecSummary {
  std::int64_t jobs_run = 0;
  std::int64_t jobs_skipped = 0;
  std::int64_t catastrophic_count = 0;
  std::map<std::string, std::int64_t> catastrophic_by_config;
};

/// Executes one (configuration, run index) job and returns its record.
/// Timeouts, crashes and runs without parseable reports come back as
/// Catastrophic records; problems with the environment itself (missing
/// runtime, image pull failure, unreadable workdir) throw EnvironmentError.
RunRecord run_once(const ExperimentPlan& plan, const ThrottleConfig& config,
                   std::int64_t run_index, const ExecOptions& options = {});

/// Runs every configs x runs_per_config job one at a time, config-major,
/// appending each record to the log as it completes. Pairs already present
/// in the log are skipped, so an interrupted invocation can be resumed.
ExecSummary execute_plan(const ExperimentPlan& plan, ResultsLog& sink,
                         const ExecOptions& options = {}, const ExecutionObserver& observer = {});

/// Environment exported to the suite: RAFT_CONFIG_ID, RAFT_RUN_INDEX and,
/// when the plan has a seed, RAFT_SEED.
std::vector<std::pair<std::string, std::string>> suite_environment(const ExperimentPlan& plan,
                                                                   const ThrottleConfig& config,
                                                                   std::int64_t run_index);

/// Substitutes {name} placeholders; unknown placeholders are left verbatim.
std::string expand_placeholders(const std::string& text,
                                const std::map<std::string, std::string>& values);

/// Full container runtime argv for one job.
std::vector<std::string> container_command(const ExperimentPlan& plan,
                                           const ThrottleConfig& config, std::int64_t run_index,
                                           const std::string& container_name);

/// Network shaper command for the config, if both a template and a network
/// limit exist.
std::optional<std::string> shaper_command(const ExperimentPlan& plan, const ThrottleConfig& config);

/// Report files currently matching the plan's result_glob under workdir.
std::vector<std::filesystem::path> matching_reports(const ExperimentPlan& plan);

}  // namespace raftlab
