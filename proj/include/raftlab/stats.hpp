#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raftlab/records.hpp"

namespace raftlab {

/// 2x2 fail/pass counts: baseline row against one throttled row.
struct ContingencyTable {
  std::int64_t baseline_fail = 0;
  std::int64_t baseline_pass = 0;
  std::int64_t throttled_fail = 0;
  std::int64_t throttled_pass = 0;
};

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Survival function of the chi-squared distribution with one degree of
/// freedom: erfc(sqrt(x / 2)).
double chi2_sf_1dof(double statistic);

/// Plain Pearson chi-squared on a 2x2 table (1 dof, no continuity
/// correction). Tables with no failures or no passes anywhere give
/// statistic 0, p 1. Throws DomainError on an empty group or negative count.
ChiSquareResult pearson_chi2(const ContingencyTable& table);

/// Benjamini-Hochberg step-up adjustment, returned in input order.
/// Throws DomainError for any p outside [0, 1].
std::vector<double> bh_adjust(std::span<const double> pvals);

enum class FdrFamily { PerTestAcrossConfigs, PerProject };

std::string_view to_string(FdrFamily family) noexcept;
std::optional<FdrFamily> parse_fdr_family(std::string_view text) noexcept;

/// Upper band edges for affectedness levels. With the default edges the
/// bands are 0, (0,1], (1,25], (25,50], (50,100], (100,200], >200.
struct AffectednessBands {
  std::vector<double> upper_edges = {1.0, 25.0, 50.0, 100.0, 200.0};

  std::string label(double ratio) const;
};

struct StatParams {
  double alpha = 0.05;
  FdrFamily fdr_family = FdrFamily::PerTestAcrossConfigs;
  std::string baseline_id = "baseline";
  AffectednessBands bands;

  void validate() const;
};

struct OutcomeCounts {
  std::int64_t fails = 0;
  std::int64_t passes = 0;

  std::int64_t observed() const noexcept { return fails + passes; }
  bool operator==(const OutcomeCounts&) const = default;
};

/// Per-test, per-config fail/pass counts over Valid runs only.
struct Tally {
  std::vector<std::string> config_order;  // first appearance of a Valid run
  std::map<std::string, std::int64_t> valid_runs;
  std::map<std::string, std::int64_t> catastrophic_runs;
  std::map<std::string, std::map<std::string, OutcomeCounts>> counts;  // test -> config -> counts

  /// Configs seen in the records with zero Valid runs ("-" in tables).
  std::vector<std::string> unavailable_configs() const;
};

Tally tally(std::span<const RunRecord> records);

struct FlakyFlags {
  bool flaky_baseline = false;
  bool flaky_any = false;
  std::vector<std::string> flaky_configs;

  bool operator==(const FlakyFlags&) const = default;
};

/// A test is flaky under a config when it both passed and failed among that
/// config's Valid runs.
std::map<std::string, FlakyFlags> detect_flaky(std::span<const RunRecord> records,
                                               std::string_view baseline_id = "baseline");

struct ConfigSignificance {
  std::int64_t fails = 0;
  std::int64_t valid_runs = 0;  // Valid runs in which the test was observed
  bool passed_at_least_once = false;
  bool tested = false;  // both groups observed the test
  double statistic = 0.0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool significant = false;

  bool operator==(const ConfigSignificance&) const = default;
};

struct RaftVerdict {
  std::string test_id;
  std::int64_t baseline_fails = 0;
  std::int64_t baseline_runs = 0;
  std::map<std::string, ConfigSignificance> per_config;  // throttled configs with Valid runs
  bool is_flaky_baseline = false;
  bool is_flaky_any = false;
  bool is_raft = false;
  double affectedness_ratio = 0.0;
  std::string affectedness_level;
  std::int64_t raft_config_count = 0;

  std::vector<std::string> significant_configs() const;
  bool operator==(const RaftVerdict&) const = default;
};

/// Classifies every test observed in Valid runs. Catastrophic runs never
/// enter any count. Throws PreconditionError when the baseline config has
/// no Valid run.
std::vector<RaftVerdict> classify_rafts(std::span<const RunRecord> records,
                                        const StatParams& params = {});

struct Affectedness {
  double ratio = 0.0;
  std::string level;
};

/// f_max / max(f_1, 1) over throttled configs that observed the test.
Affectedness affectedness(const RaftVerdict& verdict, const AffectednessBands& bands = {});

struct ResourceAttribution {
  std::map<std::string, std::int64_t> by_resource;  // "C", "M", "D", "N"
  std::map<std::string, std::int64_t> by_config;    // every throttled config id
};

/// Counts RAFTs significant under each single-resource Phase I config and
/// under every config. Throws ValidationError naming any of C, M, D, N that
/// the verdicts never mention.
ResourceAttribution resource_attribution(std::span<const RaftVerdict> verdicts);

struct PairwiseProbe {
  std::string config_id;
  double p_vs_sole = 1.0;
  double p_vs_baseline = 1.0;
};

struct SingleConfigFinding {
  std::string test_id;
  std::string sole_config;
  std::vector<std::string> indistinguishable_configs;
  std::vector<PairwiseProbe> probes;
};

/// For RAFTs significant under exactly one config, lists the other configs
/// whose counts are indistinguishable (raw p >= alpha) from both the sole
/// config and the baseline.
std::vector<SingleConfigFinding> single_config_analysis(std::span<const RaftVerdict> verdicts,
                                                        const StatParams& params = {});

}  // namespace raftlab
