#include "raftlab/cost.hpp"

#include <set>

#include "raftlab/error.hpp"

namespace raftlab {

double price_per_run(double avg_duration_seconds, double rate_usd_per_hour) {
  return avg_duration_seconds / 3600.0 * rate_usd_per_hour;
}

PricingTable builtin_pricing() {
  const auto configs = builtin_phase2();
  return pricing_from_configs(configs);
}

PricingTable pricing_from_configs(std::span<const ThrottleConfig> configs) {
  PricingTable out;
  for (const auto& c : configs)
    if (c.pricing) out[c.id] = *c.pricing;
  return out;
}

std::vector<ConfigEconomics> reliability_table(std::span<const RunRecord> records,
                                               std::span<const RaftVerdict> verdicts,
                                               const PricingTable& pricing) {
  std::set<std::string> flaky;
  for (const auto& v : verdicts)
    if (v.is_flaky_any) flaky.insert(v.test_id);

  std::vector<ConfigEconomics> rows;
  std::map<std::string, std::size_t> slot;
  std::map<std::string, double> duration_sum;
  std::map<std::string, std::set<std::string>> detected;
  for (const auto& r : records) {
    auto [it, inserted] = slot.try_emplace(r.config_id, rows.size());
    if (inserted) {
      rows.emplace_back();
      rows.back().config_id = r.config_id;
    }
    auto& row = rows[it->second];
    if (!r.valid()) {
      ++row.catastrophic_runs;
      continue;
    }
    ++row.valid_runs;
    duration_sum[r.config_id] += r.duration_seconds;
    bool build_failed = false;
    for (const auto& o : r.outcomes) {
      if (o.status != TestStatus::Fail || !flaky.count(o.test_id)) continue;
      build_failed = true;
      ++row.flaky_failures_total;
      detected[r.config_id].insert(o.test_id);
    }
    if (build_failed) ++row.failed_builds;
  }

  for (auto& row : rows) {
    if (row.valid_runs > 0)
      row.avg_duration_seconds = duration_sum[row.config_id] / static_cast<double>(row.valid_runs);
    row.unique_flaky_detected = static_cast<std::int64_t>(detected[row.config_id].size());
    if (auto p = pricing.find(row.config_id); p != pricing.end()) {
      row.price_per_run_spot = price_per_run(row.avg_duration_seconds, p->second.spot_usd_per_hour);
      row.price_per_run_ondemand =
          price_per_run(row.avg_duration_seconds, p->second.ondemand_usd_per_hour);
    }
  }
  return rows;
}

namespace {

std::vector<const ConfigEconomics*> candidates(std::span<const ConfigEconomics> table,
                                               PricingTier tier) {
  std::vector<const ConfigEconomics*> out;
  bool any_priced = false;
  for (const auto& row : table) {
    if (!row.price(tier)) continue;
    any_priced = true;
    if (row.valid_runs > 0 && row.catastrophic_runs == 0) out.push_back(&row);
  }
  if (!any_priced) throw PreconditionError("no configuration carries " +
                                           std::string(to_string(tier)) + " pricing");
  if (out.empty())
    throw PreconditionError("every priced configuration had Catastrophic runs");
  return out;
}

// Strict weak ordering: smaller is better.
template <typename Better>
const ConfigEconomics* pick(const std::vector<const ConfigEconomics*>& rows, Better better) {
  const ConfigEconomics* best = rows.front();
  for (const auto* r : rows)
    if (better(*r, *best)) best = r;
  return best;
}

const ConfigEconomics* cheapest(const std::vector<const ConfigEconomics*>& rows, PricingTier tier) {
  return pick(rows, [tier](const ConfigEconomics& a, const ConfigEconomics& b) {
    if (*a.price(tier) != *b.price(tier)) return *a.price(tier) < *b.price(tier);
    return a.config_id < b.config_id;
  });
}

}  // namespace

PreventionChoice best_for_prevention(std::span<const ConfigEconomics> table, PricingTier tier) {
  const auto rows = candidates(table, tier);
  const auto* reliable = pick(rows, [tier](const ConfigEconomics& a, const ConfigEconomics& b) {
    if (a.failed_builds != b.failed_builds) return a.failed_builds < b.failed_builds;
    if (*a.price(tier) != *b.price(tier)) return *a.price(tier) < *b.price(tier);
    return a.config_id < b.config_id;
  });
  const auto* cheap = cheapest(rows, tier);
  PreventionChoice out{reliable->config_id, cheap->config_id, std::nullopt};
  if (reliable == cheap) out.best_both = reliable->config_id;
  return out;
}

DetectionChoice best_for_detection(std::span<const ConfigEconomics> table, PricingTier tier) {
  const auto rows = candidates(table, tier);
  const auto* detector = pick(rows, [tier](const ConfigEconomics& a, const ConfigEconomics& b) {
    if (a.unique_flaky_detected != b.unique_flaky_detected)
      return a.unique_flaky_detected > b.unique_flaky_detected;
    if (a.flaky_failures_total != b.flaky_failures_total)
      return a.flaky_failures_total > b.flaky_failures_total;
    if (*a.price(tier) != *b.price(tier)) return *a.price(tier) < *b.price(tier);
    return a.config_id < b.config_id;
  });
  const auto* cheap = cheapest(rows, tier);
  DetectionChoice out{detector->config_id, cheap->config_id, std::nullopt};
  if (detector == cheap) out.best_both = detector->config_id;
  return out;
}

}  // namespace raftlab
