#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raftlab/plan.hpp"
#include "raftlab/records.hpp"
#include "raftlab/stats.hpp"

namespace raftlab {

struct SyntheticTest {
  std::string test_id;
  std::map<std::string, double> fail_prob;  // config id -> probability
  // Exact failure counts per config, placed at seeded positions among the
  // config's Valid runs. Takes precedence over fail_prob for that config.
  std::map<std::string, std::int64_t> fail_count;

  bool operator==(const SyntheticTest&) const = default;
};

struct DurationModel {
  double mean_seconds = 1.0;
  double jitter_fraction = 0.0;  // duration uniform in mean * (1 +/- jitter)

  bool operator==(const DurationModel&) const = default;
};

struct SyntheticSuite {
  std::string project_name = "synthetic";
  std::vector<SyntheticTest> tests;
  std::map<std::string, double> catastrophic_prob;
  std::map<std::string, DurationModel> duration_model;  // declares the known configs

  void validate() const;
  bool operator==(const SyntheticSuite&) const = default;
};

/// Draws n runs of one config. Per run: one catastrophic draw, one duration
/// draw, then one Bernoulli draw per fail_prob test in suite order. Exact
/// count tests pick their failing runs by a partial Fisher-Yates shuffle
/// over the Valid runs, drawn after all runs.
std::vector<RunRecord> simulate_runs(const SyntheticSuite& suite, const std::string& config_id,
                                     std::int64_t n, std::uint64_t seed);

/// Logistic failure-vs-availability curve rescaled so that level 0 gives
/// exactly `ceiling` and level 1 exactly `floor`.
struct CurveParams {
  double floor = 0.0;
  double ceiling = 1.0;
  double midpoint = 0.5;
  double steepness = 10.0;

  void validate() const;
};

double raft_curve(double resource_level, const CurveParams& params);

/// Resource availability of a config relative to the baseline, in [0, 1]:
/// the minimum over the named resources ("cpu", "memory", "disk",
/// "network"). CPU and memory compare limits against the baseline's;
/// a disk or network limit counts as 0 against an unrestricted baseline.
double resource_level(const ThrottleConfig& config, const ThrottleConfig& baseline,
                      const std::vector<std::string>& resources);

/// A synthetic experiment: matrix, suite model, run count and analysis
/// parameters.
struct Scenario {
  std::string project_name;
  std::vector<ThrottleConfig> configs;
  SyntheticSuite suite;
  std::int64_t runs_per_config = 300;
  std::uint64_t seed = 0;
  StatParams params;

  const ThrottleConfig& baseline() const;
};

/// Seed of the stream that simulates one config of one dataset.
std::uint64_t config_stream_seed(std::uint64_t seed, const std::string& config_id);

/// Every config x runs_per_config record of one dataset, config-major.
std::vector<RunRecord> simulate_dataset(const Scenario& scenario, std::uint64_t seed);

/// Tests whose behaviour under some throttled config differs from baseline.
std::vector<std::string> affected_tests(const Scenario& scenario);

struct MonteCarloSummary {
  std::int64_t repetitions = 0;
  std::int64_t affected_tests = 0;
  std::int64_t unaffected_tests = 0;
  double raft_rate = 0.0;        // RAFT verdicts among affected tests
  double false_raft_rate = 0.0;  // RAFT verdicts among unaffected tests
  double mean_flaky_baseline = 0.0;
  double mean_flaky_any = 0.0;
  double mean_rafts = 0.0;
  std::map<std::string, std::int64_t> raft_hits;  // test -> repetitions classified RAFT
};

/// Simulates and classifies datasets for seeds base_seed .. base_seed+reps-1
/// in parallel; the result does not depend on the thread count.
MonteCarloSummary monte_carlo(const Scenario& scenario, std::int64_t repetitions,
                              std::uint64_t base_seed, unsigned threads = 0);

Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
Scenario load_scenario(const std::filesystem::path& path);

/// POSIX sh script that reads RAFT_SEED / RAFT_CONFIG_ID / RAFT_RUN_INDEX
/// and prints a native-format report for the scenario's suite on stdout.
/// Exact-count tests fall back to count / runs_per_config.
std::string fixture_script(const Scenario& scenario);

}  // namespace raftlab
