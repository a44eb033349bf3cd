#include "raftlab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "raftlab/error.hpp"

namespace raftlab {

using nlohmann::ordered_json;

std::string format_number(double value) { return nlohmann::json(value).dump(); }

std::string format_price(double usd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", usd);
  return buf;
}

namespace {

// Left-aligned text table with a dashed rule under the header.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void write(std::ostream& out, const std::string& indent) const {
    std::vector<std::size_t> width;
    for (const auto& row : rows_)
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], row[i].size());
      }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      std::string line = indent;
      for (std::size_t i = 0; i < rows_[r].size(); ++i) {
        line += rows_[r][i];
        if (i + 1 < rows_[r].size()) line += std::string(width[i] - rows_[r][i].size() + 2, ' ');
      }
      out << line << '\n';
      if (r == 0) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 2 : 0);
        out << indent << std::string(total, '-') << '\n';
      }
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

bool elevated(const RaftVerdict& v, const ConfigSignificance& s) {
  // fails/valid > baseline_fails/baseline_runs, cross-multiplied
  return s.fails * v.baseline_runs > v.baseline_fails * s.valid_runs;
}

ProjectReport analyze_project(const std::string& project, std::span<const RunRecord> records,
                              const StatParams& params, const PricingTable& pricing,
                              PricingTier tier) {
  ProjectReport p;
  p.project_name = project;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : records) {
    auto [it, inserted] = slot.try_emplace(r.config_id, p.configs.size());
    if (inserted) p.configs.push_back({r.config_id, 0, 0});
    auto& c = p.configs[it->second];
    (r.valid() ? c.valid_runs : c.catastrophic_runs) += 1;
  }
  try {
    p.verdicts = classify_rafts(records, params);
  } catch (const PreconditionError& e) {
    throw PreconditionError("project '" + project + "': " + e.what() +
                            "; analysis needs at least one Valid run of the baseline config");
  }
  p.tests_observed = static_cast<std::int64_t>(p.verdicts.size());
  for (const auto& v : p.verdicts) {
    p.flaky_baseline += v.is_flaky_baseline;
    p.flaky_any += v.is_flaky_any;
    p.rafts += v.is_raft;
  }
  p.economics = reliability_table(records, p.verdicts, pricing);
  try {
    p.prevention = best_for_prevention(p.economics, tier);
    p.detection = best_for_detection(p.economics, tier);
  } catch (const PreconditionError& e) {
    p.selection_note = e.what();
  }
  p.recommendation = recommend(p.economics, p.verdicts, tier);
  return p;
}

}  // namespace

Recommendation recommend(std::span<const ConfigEconomics> economics,
                         std::span<const RaftVerdict> verdicts, PricingTier tier) {
  const ConfigEconomics* best = nullptr;
  std::int64_t excluded_catastrophic = 0, excluded_raft = 0, priced = 0;
  for (const auto& row : economics) {
    const auto price = row.price(tier);
    if (!price || row.valid_runs == 0) continue;
    ++priced;
    if (row.catastrophic_runs > 0) {
      ++excluded_catastrophic;
      continue;
    }
    const bool raft_elevated = std::any_of(verdicts.begin(), verdicts.end(), [&](const auto& v) {
      if (!v.is_raft) return false;
      auto s = v.per_config.find(row.config_id);
      return s != v.per_config.end() && s->second.significant && elevated(v, s->second);
    });
    if (raft_elevated) {
      ++excluded_raft;
      continue;
    }
    if (!best || *price < *best->price(tier) ||
        (*price == *best->price(tier) && row.config_id < best->config_id))
      best = &row;
  }
  Recommendation r;
  if (best) {
    r.min_config_id = best->config_id;
    r.rationale = "cheapest " + std::string(to_string(tier)) +
                  "-priced configuration with no Catastrophic runs and no RAFT significantly "
                  "elevated under it (" + format_price(*best->price(tier)) + " USD per run)";
  } else if (priced == 0) {
    r.rationale = "no configuration qualifies: none carries " + std::string(to_string(tier)) +
                  " pricing and a Valid run";
  } else {
    r.rationale = "no configuration qualifies: " + std::to_string(excluded_catastrophic) +
                  " priced configuration(s) had Catastrophic runs and " +
                  std::to_string(excluded_raft) + " showed significantly elevated RAFTs";
  }
  return r;
}

Report build_report(std::span<const RunRecord> records, const StatParams& params,
                    const PricingTable& pricing, PricingTier tier) {
  params.validate();
  if (records.empty()) throw PreconditionError("results log holds no records");
  Report report;
  report.params = params;
  report.tier = tier;
  std::vector<std::string> order;
  std::map<std::string, std::vector<RunRecord>> by_project;
  for (const auto& r : records) {
    auto [it, inserted] = by_project.try_emplace(r.project_name);
    if (inserted) order.push_back(r.project_name);
    it->second.push_back(r);
  }
  for (const auto& name : order)
    report.projects.push_back(analyze_project(name, by_project[name], params, pricing, tier));
  return report;
}

namespace {

ordered_json params_json(const Report& r) {
  ordered_json j;
  j["alpha"] = r.params.alpha;
  j["fdr_family"] = std::string(to_string(r.params.fdr_family));
  j["baseline"] = r.params.baseline_id;
  j["pricing_tier"] = std::string(to_string(r.tier));
  return j;
}

ordered_json summary_json(const ProjectReport& p) {
  ordered_json j;
  j["tests_observed"] = p.tests_observed;
  j["flaky_baseline"] = p.flaky_baseline;
  j["flaky_any"] = p.flaky_any;
  j["rafts"] = p.rafts;
  return j;
}

ordered_json configs_json(const ProjectReport& p) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : p.configs) {
    ordered_json j;
    j["config_id"] = c.config_id;
    j["valid_runs"] = c.valid_runs;
    j["catastrophic_runs"] = c.catastrophic_runs;
    j["available"] = c.valid_runs > 0;
    arr.push_back(std::move(j));
  }
  return arr;
}

ordered_json verdict_json(const RaftVerdict& v, const std::vector<ConfigAvailability>& configs) {
  ordered_json j;
  j["test_id"] = v.test_id;
  j["baseline_fails"] = v.baseline_fails;
  j["baseline_runs"] = v.baseline_runs;
  j["flaky_baseline"] = v.is_flaky_baseline;
  j["flaky_any"] = v.is_flaky_any;
  j["is_raft"] = v.is_raft;
  j["affectedness_ratio"] = v.affectedness_level == "-" ? ordered_json(nullptr)
                                                        : ordered_json(v.affectedness_ratio);
  j["affectedness_level"] = v.affectedness_level;
  j["raft_config_count"] = v.raft_config_count;
  j["significant_configs"] = v.significant_configs();
  ordered_json per = ordered_json::object();
  for (const auto& c : configs) {
    auto s = v.per_config.find(c.config_id);
    if (s == v.per_config.end()) {
      if (c.valid_runs == 0) per[c.config_id] = nullptr;  // unavailable
      continue;
    }
    ordered_json k;
    k["fails"] = s->second.fails;
    k["valid_runs"] = s->second.valid_runs;
    k["passed_at_least_once"] = s->second.passed_at_least_once;
    k["tested"] = s->second.tested;
    k["statistic"] = s->second.statistic;
    k["raw_p"] = s->second.raw_p;
    k["adjusted_p"] = s->second.adjusted_p;
    k["significant"] = s->second.significant;
    per[c.config_id] = std::move(k);
  }
  j["per_config"] = std::move(per);
  return j;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json economics_rows_json(const ProjectReport& p) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : p.economics) {
    ordered_json j;
    const bool available = e.valid_runs > 0;
    j["config_id"] = e.config_id;
    j["valid_runs"] = e.valid_runs;
    j["catastrophic_runs"] = e.catastrophic_runs;
    j["avg_duration_seconds"] = available ? ordered_json(e.avg_duration_seconds) : nullptr;
    j["price_per_run_spot"] = available ? optional_number(e.price_per_run_spot) : nullptr;
    j["price_per_run_ondemand"] = available ? optional_number(e.price_per_run_ondemand) : nullptr;
    j["failed_builds"] = available ? ordered_json(e.failed_builds) : nullptr;
    j["unique_flaky_detected"] = available ? ordered_json(e.unique_flaky_detected) : nullptr;
    j["flaky_failures_total"] = available ? ordered_json(e.flaky_failures_total) : nullptr;
    arr.push_back(std::move(j));
  }
  return arr;
}

ordered_json optional_id(const std::optional<std::string>& id) {
  return id ? ordered_json(*id) : ordered_json(nullptr);
}

ordered_json selection_json(const ProjectReport& p) {
  ordered_json j;
  if (p.prevention) {
    j["prevention"] = {{"best_reliability", p.prevention->best_reliability},
                       {"best_price", p.prevention->best_price},
                       {"best_both", optional_id(p.prevention->best_both)}};
  } else {
    j["prevention"] = nullptr;
  }
  if (p.detection) {
    j["detection"] = {{"best_detection", p.detection->best_detection},
                      {"best_price", p.detection->best_price},
                      {"best_both", optional_id(p.detection->best_both)}};
  } else {
    j["detection"] = nullptr;
  }
  if (!p.selection_note.empty()) j["note"] = p.selection_note;
  return j;
}

std::vector<const RaftVerdict*> flaky_verdicts(const ProjectReport& p) {
  std::vector<const RaftVerdict*> out;
  for (const auto& v : p.verdicts)
    if (v.is_flaky_any) out.push_back(&v);
  return out;
}

}  // namespace

ordered_json analysis_to_json(const Report& report) {
  ordered_json doc;
  doc["kind"] = "raftlab-analysis";
  doc["parameters"] = params_json(report);
  ordered_json projects = ordered_json::array();
  for (const auto& p : report.projects) {
    ordered_json j;
    j["project_name"] = p.project_name;
    j["summary"] = summary_json(p);
    j["configs"] = configs_json(p);
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : p.verdicts) verdicts.push_back(verdict_json(v, p.configs));
    j["verdicts"] = std::move(verdicts);
    projects.push_back(std::move(j));
  }
  doc["projects"] = std::move(projects);
  return doc;
}

ordered_json economics_to_json(const Report& report) {
  ordered_json doc;
  doc["kind"] = "raftlab-cost";
  doc["parameters"] = params_json(report);
  ordered_json projects = ordered_json::array();
  for (const auto& p : report.projects) {
    ordered_json j;
    j["project_name"] = p.project_name;
    j["economics"] = economics_rows_json(p);
    j["selection"] = selection_json(p);
    projects.push_back(std::move(j));
  }
  doc["projects"] = std::move(projects);
  return doc;
}

ordered_json report_to_json(const Report& report) {
  ordered_json doc;
  doc["kind"] = "raftlab-report";
  doc["parameters"] = params_json(report);
  ordered_json projects = ordered_json::array();
  for (const auto& p : report.projects) {
    ordered_json j;
    j["project_name"] = p.project_name;
    j["summary"] = summary_json(p);
    j["configs"] = configs_json(p);
    ordered_json verdicts = ordered_json::array();
    for (const auto* v : flaky_verdicts(p)) verdicts.push_back(verdict_json(*v, p.configs));
    j["flaky_verdicts"] = std::move(verdicts);
    j["economics"] = economics_rows_json(p);
    j["selection"] = selection_json(p);
    j["recommendation"] = {{"min_config_id", optional_id(p.recommendation.min_config_id)},
                           {"rationale", p.recommendation.rationale}};
    projects.push_back(std::move(j));
  }
  doc["projects"] = std::move(projects);
  return doc;
}

namespace {

void write_params(std::ostream& out, const Report& r) {
  out << "alpha: " << format_number(r.params.alpha) << "\n"
      << "FDR family: " << to_string(r.params.fdr_family) << "\n"
      << "baseline: " << r.params.baseline_id << "\n"
      << "pricing tier: " << to_string(r.tier) << "\n";
}

std::string dash_or(bool available, const std::string& text) { return available ? text : "-"; }

std::string price_cell(bool available, const std::optional<double>& price) {
  if (!available || !price) return "-";
  return format_price(*price);
}

void write_economics(std::ostream& out, const ProjectReport& p) {
  TextTable t({"config", "valid", "catastrophic", "avg_seconds", "spot_usd", "ondemand_usd",
               "failed_builds", "unique_flaky", "flaky_failures", "marks"});
  for (const auto& e : p.economics) {
    const bool a = e.valid_runs > 0;
    std::vector<std::string> marks;
    if (p.prevention && p.prevention->best_reliability == e.config_id) marks.push_back("reliability");
    if (p.detection && p.detection->best_detection == e.config_id) marks.push_back("detection");
    if (p.prevention && p.prevention->best_price == e.config_id) marks.push_back("price");
    if (p.prevention && p.prevention->best_both == e.config_id) marks.push_back("both-prevention");
    if (p.detection && p.detection->best_both == e.config_id) marks.push_back("both-detection");
    t.add({e.config_id, std::to_string(e.valid_runs), std::to_string(e.catastrophic_runs),
           dash_or(a, format_number(e.avg_duration_seconds)), price_cell(a, e.price_per_run_spot),
           price_cell(a, e.price_per_run_ondemand), dash_or(a, std::to_string(e.failed_builds)),
           dash_or(a, std::to_string(e.unique_flaky_detected)),
           dash_or(a, std::to_string(e.flaky_failures_total)), marks.empty() ? "" : join(marks, ",")});
  }
  t.write(out, "  ");
}

void write_selection(std::ostream& out, const ProjectReport& p) {
  if (p.prevention) {
    out << "  best for prevention: reliability " << p.prevention->best_reliability << ", price "
        << p.prevention->best_price << ", both "
        << p.prevention->best_both.value_or("-") << "\n";
  }
  if (p.detection) {
    out << "  best for detection: detection " << p.detection->best_detection << ", price "
        << p.detection->best_price << ", both " << p.detection->best_both.value_or("-") << "\n";
  }
  if (!p.selection_note.empty()) out << "  no selection: " << p.selection_note << "\n";
}

}  // namespace

std::string economics_to_text(const Report& report) {
  std::ostringstream out;
  out << "RAFT cost report\n";
  write_params(out, report);
  for (const auto& p : report.projects) {
    out << "\nProject " << p.project_name << "\n";
    write_economics(out, p);
    write_selection(out, p);
  }
  return out.str();
}

std::string report_to_text(const Report& report) {
  std::ostringstream out;
  out << "RAFT report\n";
  write_params(out, report);
  for (const auto& p : report.projects) {
    out << "\n== Project " << p.project_name << " ==\n\n";
    out << "Summary\n"
        << "  tests observed: " << p.tests_observed << "\n"
        << "  flaky under baseline: " << p.flaky_baseline << "\n"
        << "  flaky under any config: " << p.flaky_any << "\n"
        << "  RAFTs: " << p.rafts << "\n\n";

    out << "Configurations\n";
    TextTable configs({"config", "valid", "catastrophic", "available"});
    for (const auto& c : p.configs)
      configs.add({c.config_id, std::to_string(c.valid_runs), std::to_string(c.catastrophic_runs),
                   c.valid_runs > 0 ? "yes" : "-"});
    configs.write(out, "  ");

    out << "\nRAFTs\n";
    bool any_raft = false;
    for (const auto& v : p.verdicts) {
      if (!v.is_raft) continue;
      any_raft = true;
      out << "  " << v.test_id << ": significant under " << join(v.significant_configs())
          << "; affectedness " << format_number(v.affectedness_ratio) << " "
          << v.affectedness_level << "\n";
    }
    if (!any_raft) out << "  none\n";

    out << "\nFlaky test verdicts\n";
    const auto flaky = flaky_verdicts(p);
    if (flaky.empty()) out << "  none\n";
    for (const auto* v : flaky) {
      out << "  " << v->test_id << "\n"
          << "    baseline fails " << v->baseline_fails << "/" << v->baseline_runs
          << ", flaky under baseline " << yes_no(v->is_flaky_baseline) << ", RAFT "
          << yes_no(v->is_raft) << ", affectedness "
          << (v->affectedness_level == "-" ? "-" : format_number(v->affectedness_ratio)) << " "
          << v->affectedness_level << "\n";
      TextTable t({"config", "fails", "runs", "statistic", "raw_p", "adjusted_p", "significant"});
      for (const auto& c : p.configs) {
        auto s = v->per_config.find(c.config_id);
        if (s == v->per_config.end()) {
          if (c.valid_runs == 0) t.add({c.config_id, "-", "-", "-", "-", "-", "-"});
          continue;
        }
        const auto& k = s->second;
        t.add({c.config_id, std::to_string(k.fails), std::to_string(k.valid_runs),
               format_number(k.statistic), format_number(k.raw_p), format_number(k.adjusted_p),
               yes_no(k.significant)});
      }
      t.write(out, "    ");
    }

    out << "\nEconomics (USD per run)\n";
    write_economics(out, p);
    write_selection(out, p);

    out << "\nRecommendation\n"
        << "  config: " << p.recommendation.min_config_id.value_or("none") << "\n"
        << "  rationale: " << p.recommendation.rationale << "\n";
  }
  return out.str();
}

}  // namespace raftlab
