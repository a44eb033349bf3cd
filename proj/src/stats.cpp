#include "raftlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "raftlab/error.hpp"

namespace raftlab {

double chi2_sf_1dof(double statistic) {
  if (!(statistic > 0.0)) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

ChiSquareResult pearson_chi2(const ContingencyTable& t) {
  if (t.baseline_fail < 0 || t.baseline_pass < 0 || t.throttled_fail < 0 || t.throttled_pass < 0)
    throw DomainError("contingency table counts must be non-negative");
  const std::int64_t row_base = t.baseline_fail + t.baseline_pass;
  const std::int64_t row_thr = t.throttled_fail + t.throttled_pass;
  if (row_base == 0 || row_thr == 0)
    throw DomainError("contingency table has an empty group");
  const std::int64_t col_fail = t.baseline_fail + t.throttled_fail;
  const std::int64_t col_pass = t.baseline_pass + t.throttled_pass;
  if (col_fail == 0 || col_pass == 0) return {0.0, 1.0};

  const double n = static_cast<double>(row_base + row_thr);
  const double cross = static_cast<double>(t.baseline_fail * t.throttled_pass -
                                           t.baseline_pass * t.throttled_fail);
  const double margins = static_cast<double>(row_base) * static_cast<double>(row_thr) *
                         static_cast<double>(col_fail) * static_cast<double>(col_pass);
  const double statistic = n * cross * cross / margins;
  return {statistic, chi2_sf_1dof(statistic)};
}

std::vector<double> bh_adjust(std::span<const double> pvals) {
  const std::size_t m = pvals.size();
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-value outside [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double p = pvals[order[k]];
    // m / rank first: the factor is >= 1, so rounding never drops below p
    const double scaled = static_cast<double>(m) / static_cast<double>(k + 1) * p;
    running = std::min(running, scaled);
    adjusted[order[k]] = running;
  }
  return adjusted;
}

std::string_view to_string(FdrFamily family) noexcept {
  return family == FdrFamily::PerProject ? "per-project" : "per-test";
}

std::optional<FdrFamily> parse_fdr_family(std::string_view text) noexcept {
  if (text == "per-test" || text == "per-test-across-configs") return FdrFamily::PerTestAcrossConfigs;
  if (text == "per-project") return FdrFamily::PerProject;
  return std::nullopt;
}

namespace {

std::string format_edge(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string AffectednessBands::label(double ratio) const {
  if (ratio <= 0.0) return "0";
  double lower = 0.0;
  for (double upper : upper_edges) {
    if (ratio <= upper) return "(" + format_edge(lower) + "," + format_edge(upper) + "]";
    lower = upper;
  }
  return ">" + format_edge(lower);
}

void StatParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie strictly between 0 and 1");
  if (baseline_id.empty()) throw DomainError("baseline config id must be non-empty");
  for (std::size_t i = 0; i < bands.upper_edges.size(); ++i)
    if (!(bands.upper_edges[i] > (i ? bands.upper_edges[i - 1] : 0.0)))
      throw DomainError("affectedness band edges must be positive and strictly increasing");
}

std::vector<std::string> Tally::unavailable_configs() const {
  std::vector<std::string> out;
  for (const auto& [id, n] : catastrophic_runs)
    if (!valid_runs.count(id)) out.push_back(id);
  return out;
}

Tally tally(std::span<const RunRecord> records) {
  Tally t;
  for (const auto& r : records) {
    if (!r.valid()) {
      ++t.catastrophic_runs[r.config_id];
      continue;
    }
    if (t.valid_runs[r.config_id]++ == 0) t.config_order.push_back(r.config_id);
    for (const auto& o : r.outcomes) {
      auto& c = t.counts[o.test_id][r.config_id];
      (o.status == TestStatus::Fail ? c.fails : c.passes) += 1;
    }
  }
  return t;
}

std::map<std::string, FlakyFlags> detect_flaky(std::span<const RunRecord> records,
                                               std::string_view baseline_id) {
  const Tally t = tally(records);
  std::map<std::string, FlakyFlags> out;
  for (const auto& [test, per_config] : t.counts) {
    FlakyFlags f;
    for (const auto& [config, c] : per_config) {
      if (c.fails > 0 && c.passes > 0) {
        f.flaky_configs.push_back(config);
        if (config == baseline_id) f.flaky_baseline = true;
      }
    }
    f.flaky_any = !f.flaky_configs.empty();
    out.emplace(test, std::move(f));
  }
  return out;
}

std::vector<std::string> RaftVerdict::significant_configs() const {
  std::vector<std::string> out;
  for (const auto& [id, c] : per_config)
    if (c.significant) out.push_back(id);
  return out;
}

Affectedness affectedness(const RaftVerdict& v, const AffectednessBands& bands) {
  std::int64_t f_max = 0;
  bool any = false;
  for (const auto& [id, c] : v.per_config) {
    if (c.valid_runs == 0) continue;
    any = true;
    f_max = std::max(f_max, c.fails);
  }
  if (!any) return {0.0, "-"};
  const double ratio =
      static_cast<double>(f_max) / static_cast<double>(std::max<std::int64_t>(v.baseline_fails, 1));
  return {ratio, bands.label(ratio)};
}

std::vector<RaftVerdict> classify_rafts(std::span<const RunRecord> records,
                                        const StatParams& params) {
  params.validate();
  const Tally t = tally(records);
  if (!t.valid_runs.count(params.baseline_id))
    throw PreconditionError("baseline configuration '" + params.baseline_id +
                            "' has no Valid runs");

  std::vector<RaftVerdict> verdicts;
  verdicts.reserve(t.counts.size());
  for (const auto& [test, per_config] : t.counts) {
    RaftVerdict v;
    v.test_id = test;
    OutcomeCounts base;
    if (auto it = per_config.find(params.baseline_id); it != per_config.end()) base = it->second;
    v.baseline_fails = base.fails;
    v.baseline_runs = base.observed();
    v.is_flaky_baseline = base.fails > 0 && base.passes > 0;
    v.is_flaky_any = v.is_flaky_baseline;

    for (const auto& [config, n_valid] : t.valid_runs) {
      if (config == params.baseline_id) continue;
      ConfigSignificance s;
      OutcomeCounts c;
      if (auto it = per_config.find(config); it != per_config.end()) c = it->second;
      s.fails = c.fails;
      s.valid_runs = c.observed();
      s.passed_at_least_once = c.passes > 0;
      v.is_flaky_any = v.is_flaky_any || (c.fails > 0 && c.passes > 0);
      if (s.valid_runs > 0 && v.baseline_runs > 0) {
        s.tested = true;
        const auto chi = pearson_chi2({base.fails, base.passes, c.fails, c.passes});
        s.statistic = chi.statistic;
        s.raw_p = chi.p_value;
      }
      v.per_config.emplace(config, s);
    }
    verdicts.push_back(std::move(v));
  }

  // Per-test families first; the per-project family then overrides the
  // adjustment for flaky tests, which are the only RAFT candidates.
  auto adjust = [](std::vector<ConfigSignificance*>& members) {
    std::vector<double> raw;
    raw.reserve(members.size());
    for (auto* m : members) raw.push_back(m->raw_p);
    const auto adj = bh_adjust(raw);
    for (std::size_t i = 0; i < members.size(); ++i) members[i]->adjusted_p = adj[i];
  };
  std::vector<ConfigSignificance*> project_family;
  for (auto& v : verdicts) {
    std::vector<ConfigSignificance*> family;
    for (auto& [id, s] : v.per_config)
      if (s.tested) family.push_back(&s);
    adjust(family);
    if (v.is_flaky_any) project_family.insert(project_family.end(), family.begin(), family.end());
  }
  if (params.fdr_family == FdrFamily::PerProject) adjust(project_family);

  for (auto& v : verdicts) {
    for (auto& [id, s] : v.per_config) {
      s.significant = s.tested && s.passed_at_least_once && s.adjusted_p < params.alpha;
      if (s.significant) ++v.raft_config_count;
    }
    v.is_raft = v.is_flaky_any && v.raft_config_count > 0;
    const auto a = affectedness(v, params.bands);
    v.affectedness_ratio = a.ratio;
    v.affectedness_level = a.level;
  }
  return verdicts;
}

ResourceAttribution resource_attribution(std::span<const RaftVerdict> verdicts) {
  static const char* const kResources[] = {"C", "M", "D", "N"};
  ResourceAttribution out;
  for (const char* r : kResources) out.by_resource[r] = 0;
  if (verdicts.empty()) return out;

  std::set<std::string> known;
  for (const auto& v : verdicts)
    for (const auto& [id, s] : v.per_config) {
      known.insert(id);
      out.by_config.try_emplace(id, 0);
    }
  std::string missing;
  for (const char* r : kResources)
    if (!known.count(r)) missing += missing.empty() ? r : std::string(", ") + r;
  if (!missing.empty())
    throw ValidationError("resource attribution needs the Phase I single-resource configs; missing: " +
                          missing);

  for (const auto& v : verdicts) {
    if (!v.is_raft) continue;
    for (const auto& [id, s] : v.per_config) {
      if (!s.significant) continue;
      ++out.by_config[id];
      if (auto it = out.by_resource.find(id); it != out.by_resource.end()) ++it->second;
    }
  }
  return out;
}

std::vector<SingleConfigFinding> single_config_analysis(std::span<const RaftVerdict> verdicts,
                                                        const StatParams& params) {
  params.validate();
  std::vector<SingleConfigFinding> out;
  for (const auto& v : verdicts) {
    if (!v.is_raft || v.raft_config_count != 1) continue;
    SingleConfigFinding f;
    f.test_id = v.test_id;
    f.sole_config = v.significant_configs().front();
    const auto& sole = v.per_config.at(f.sole_config);
    const std::int64_t base_pass = v.baseline_runs - v.baseline_fails;
    const std::int64_t sole_pass = sole.valid_runs - sole.fails;
    for (const auto& [id, s] : v.per_config) {
      if (id == f.sole_config || s.valid_runs == 0) continue;
      const std::int64_t pass = s.valid_runs - s.fails;
      PairwiseProbe probe;
      probe.config_id = id;
      probe.p_vs_sole = pearson_chi2({sole.fails, sole_pass, s.fails, pass}).p_value;
      probe.p_vs_baseline = pearson_chi2({v.baseline_fails, base_pass, s.fails, pass}).p_value;
      if (probe.p_vs_sole >= params.alpha && probe.p_vs_baseline >= params.alpha)
        f.indistinguishable_configs.push_back(id);
      f.probes.push_back(std::move(probe));
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace raftlab
