#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "raftlab/cost.hpp"
#include "raftlab/records.hpp"
#include "raftlab/stats.hpp"

namespace raftlab {

struct Recommendation {
  std::optional<std::string> min_config_id;
  std::string rationale;
};

struct ConfigAvailability {
  std::string config_id;
  std::int64_t valid_runs = 0;
  std::int64_t catastrophic_runs = 0;
};

/// Everything the reports say about one project.
struct ProjectReport {
  std::string project_name;
  std::vector<ConfigAvailability> configs;  // first appearance in the log
  std::int64_t tests_observed = 0;
  std::int64_t flaky_baseline = 0;
  std::int64_t flaky_any = 0;
  std::int64_t rafts = 0;
  std::vector<RaftVerdict> verdicts;  // sorted by test id
  std::vector<ConfigEconomics> economics;
  std::optional<PreventionChoice> prevention;
  std::optional<DetectionChoice> detection;
  std::string selection_note;  // why prevention/detection are absent
  Recommendation recommendation;
};

struct Report {
  StatParams params;
  PricingTier tier = PricingTier::OnDemand;
  std::vector<ProjectReport> projects;  // first appearance in the log
};

/// Splits records by project and analyzes each. Throws PreconditionError
/// when the log is empty or a project has no Valid baseline run.
Report build_report(std::span<const RunRecord> records, const StatParams& params,
                    const PricingTable& pricing, PricingTier tier = PricingTier::OnDemand);

/// Cheapest priced config with >= 1 Valid run, no Catastrophic run, and
/// no RAFT significantly elevated under it.
Recommendation recommend(std::span<const ConfigEconomics> economics,
                         std::span<const RaftVerdict> verdicts, PricingTier tier);

nlohmann::ordered_json report_to_json(const Report& report);
std::string report_to_text(const Report& report);

/// Verdicts document written by `analyze`.
nlohmann::ordered_json analysis_to_json(const Report& report);

/// Economics tables written by `cost`.
nlohmann::ordered_json economics_to_json(const Report& report);
std::string economics_to_text(const Report& report);

/// Shortest decimal text that reads back as the same double; the same
/// rendering the JSON documents use.
std::string format_number(double value);
/// Fixed six decimals, as prices are printed.
std::string format_price(double usd);

}  // namespace raftlab
