#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raftlab/plan.hpp"
#include "raftlab/records.hpp"
#include "raftlab/stats.hpp"

namespace raftlab {

/// duration / 3600 * rate, unrounded.
double price_per_run(double avg_duration_seconds, double rate_usd_per_hour);

struct ConfigEconomics {
  std::string config_id;
  double avg_duration_seconds = 0.0;  // mean over Valid runs
  std::optional<double> price_per_run_spot;
  std::optional<double> price_per_run_ondemand;
  std::int64_t failed_builds = 0;  // Valid runs with >= 1 failing flaky test
  std::int64_t valid_runs = 0;
  std::int64_t catastrophic_runs = 0;
  std::int64_t unique_flaky_detected = 0;
  std::int64_t flaky_failures_total = 0;

  std::optional<double> price(PricingTier tier) const noexcept {
    return tier == PricingTier::Spot ? price_per_run_spot : price_per_run_ondemand;
  }
  bool operator==(const ConfigEconomics&) const = default;
};

using PricingTable = std::map<std::string, Pricing>;

/// Prices of the built-in Phase II configurations keyed by id.
PricingTable builtin_pricing();
PricingTable pricing_from_configs(std::span<const ThrottleConfig> configs);

/// One row per config seen in the records, in first-appearance order.
/// Flaky means flaky_any in the verdicts.
std::vector<ConfigEconomics> reliability_table(std::span<const RunRecord> records,
                                               std::span<const RaftVerdict> verdicts,
                                               const PricingTable& pricing);

struct PreventionChoice {
  std::string best_reliability;
  std::string best_price;
  std::optional<std::string> best_both;
};

struct DetectionChoice {
  std::string best_detection;
  std::string best_price;
  std::optional<std::string> best_both;
};

/// Candidates are priced configs with >= 1 Valid run and no Catastrophic
/// run. Fewest failed builds wins; ties go to the cheaper config, then to
/// the lexicographically smaller id. Throws PreconditionError when no
/// config qualifies.
PreventionChoice best_for_prevention(std::span<const ConfigEconomics> table,
                                     PricingTier tier = PricingTier::OnDemand);

/// Most unique flaky tests detected wins; ties go to more flaky failures,
/// then the cheaper config, then the smaller id.
DetectionChoice best_for_detection(std::span<const ConfigEconomics> table,
                                   PricingTier tier = PricingTier::OnDemand);

}  // namespace raftlab
