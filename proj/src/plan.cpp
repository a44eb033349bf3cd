#include "raftlab/plan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json_fields.hpp"
#include "raftlab/error.hpp"

namespace raftlab {

using nlohmann::json;

std::string_view to_string(PricingTier tier) noexcept {
  return tier == PricingTier::Spot ? "spot" : "ondemand";
}

std::optional<PricingTier> parse_pricing_tier(std::string_view text) noexcept {
  if (text == "spot") return PricingTier::Spot;
  if (text == "ondemand" || text == "on-demand") return PricingTier::OnDemand;
  return std::nullopt;
}

std::optional<double> ThrottleConfig::hourly_rate(PricingTier tier) const noexcept {
  if (!pricing) return std::nullopt;
  return tier == PricingTier::Spot ? pricing->spot_usd_per_hour : pricing->ondemand_usd_per_hour;
}

const ThrottleConfig& ExperimentPlan::baseline() const {
  auto it = std::find_if(configs.begin(), configs.end(), [](const auto& c) { return c.baseline; });
  if (it == configs.end()) throw ValidationError("plan has no baseline configuration");
  return *it;
}

const ThrottleConfig* ExperimentPlan::find(std::string_view config_id) const noexcept {
  for (const auto& c : configs)
    if (c.id == config_id) return &c;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Built-in matrices

namespace {

constexpr double kVmCores = 4.0;
constexpr double kVmMemoryGib = 16.0;
constexpr double kThrottledCores = 0.1;
constexpr double kThrottledMemoryGib = 0.5;
constexpr DiskLimit kThrottledDisk{50.0, 100.0};
constexpr NetworkLimit kThrottledNetwork{1500.0, 512.0};

ThrottleConfig phase1_entry(std::string id) {
  ThrottleConfig c;
  c.cpu_limit = id.find('C') != std::string::npos ? kThrottledCores : kVmCores;
  c.memory_limit_gib = id.find('M') != std::string::npos ? kThrottledMemoryGib : kVmMemoryGib;
  if (id.find('D') != std::string::npos) c.disk_limit = kThrottledDisk;
  if (id.find('N') != std::string::npos) c.network_limit = kThrottledNetwork;
  c.id = std::move(id);
  return c;
}

struct FargateRow {
  double cpu;
  double memory_gib;
  double spot;
  double ondemand;
};

// USD/hour, ascending by on-demand price.
constexpr FargateRow kFargate[] = {
    {0.1, 1, 0.002548, 0.008493},  {0.1, 2, 0.003881, 0.012938},
    {0.25, 2, 0.005703, 0.019010}, {0.5, 2, 0.008739, 0.029130},
    {0.5, 4, 0.011406, 0.038020},  {1, 4, 0.017478, 0.058260},
    {1, 8, 0.022812, 0.076040},    {2, 4, 0.029622, 0.098740},
    {2, 8, 0.034956, 0.116520},    {2, 16, 0.045624, 0.152080},
    {4, 8, 0.059244, 0.197480},    {4, 16, 0.069912, 0.233040},
};

}  // namespace

std::vector<ThrottleConfig> builtin_phase1() {
  static const char* const kIds[] = {"C",  "M",  "D",   "N",   "CM",  "CN",  "MN",  "CD",
                                     "MD", "DN", "CMN", "CMD", "CDN", "MDN", "CMDN"};
  std::vector<ThrottleConfig> out;
  out.reserve(16);
  ThrottleConfig base = phase1_entry("baseline");
  base.baseline = true;
  out.push_back(std::move(base));
  for (const char* id : kIds) out.push_back(phase1_entry(id));
  return out;
}

std::vector<ThrottleConfig> builtin_phase2() {
  std::vector<ThrottleConfig> out;
  out.reserve(std::size(kFargate));
  int row = 1;
  for (const auto& r : kFargate) {
    ThrottleConfig c;
    char id[16];
    std::snprintf(id, sizeof id, "aws-%02d", row++);
    c.id = id;
    c.cpu_limit = r.cpu;
    c.memory_limit_gib = r.memory_gib;
    c.pricing = Pricing{r.spot, r.ondemand};
    out.push_back(std::move(c));
  }
  out.back().baseline = true;
  return out;
}

std::optional<std::vector<ThrottleConfig>> builtin_matrix(std::string_view name) {
  if (name == "phase1") return builtin_phase1();
  if (name == "phase2") return builtin_phase2();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void require_positive(const std::optional<double>& v, const std::string& where) {
  if (v && !(std::isfinite(*v) && *v > 0.0))
    throw ValidationError(where + " must be strictly positive");
}

}  // namespace

void validate_config(const ThrottleConfig& c) {
  const std::string where = "config '" + c.id + "'";
  if (c.id.empty()) throw ValidationError("config id must be non-empty");
  require_positive(c.cpu_limit, where + ": cpu_limit");
  require_positive(c.memory_limit_gib, where + ": memory_limit_gib");
  if (c.disk_limit) {
    require_positive(c.disk_limit->iops, where + ": disk_limit.iops");
    require_positive(c.disk_limit->throughput_kbps, where + ": disk_limit.throughput_kbps");
  }
  if (c.network_limit) {
    require_positive(c.network_limit->download_kbps, where + ": network_limit.download_kbps");
    require_positive(c.network_limit->upload_kbps, where + ": network_limit.upload_kbps");
  }
  if (c.pricing) {
    for (double rate : {c.pricing->spot_usd_per_hour, c.pricing->ondemand_usd_per_hour})
      if (!(std::isfinite(rate) && rate >= 0.0))
        throw ValidationError(where + ": pricing rates must be non-negative");
  }
}

void validate_configs(std::vector<ThrottleConfig>& configs) {
  if (configs.empty()) throw ValidationError("configs must be non-empty");
  std::set<std::string> seen;
  for (const auto& c : configs) {
    validate_config(c);
    if (!seen.insert(c.id).second)
      throw ValidationError("duplicate config id '" + c.id + "'");
  }
  auto flagged = std::count_if(configs.begin(), configs.end(), [](auto& c) { return c.baseline; });
  if (flagged > 1) throw ValidationError("plan declares more than one baseline configuration");
  if (flagged == 0) {
    // Without an explicit flag the unrestricted configuration is the baseline.
    auto unrestricted = std::count_if(configs.begin(), configs.end(),
                                      [](auto& c) { return !c.has_any_limit(); });
    if (unrestricted != 1)
      throw ValidationError(
          "plan must contain exactly one baseline configuration (flag one with "
          "\"baseline\": true or leave exactly one configuration unrestricted)");
    for (auto& c : configs)
      if (!c.has_any_limit()) c.baseline = true;
  }
}

void validate_plan(ExperimentPlan& plan) {
  if (plan.project_name.empty()) throw ValidationError("project_name must be non-empty");
  if (plan.runs_per_config < 1) throw ValidationError("runs_per_config must be >= 1");
  if (!(std::isfinite(plan.timeout_seconds) && plan.timeout_seconds > 0.0))
    throw ValidationError("timeout_seconds must be > 0");
  validate_configs(plan.configs);
}

// ---------------------------------------------------------------------------
// Document parsing

json parse_json_document(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    offset = std::min(offset, text.size());
    std::size_t line = 1 + std::count(text.begin(), text.begin() + offset, '\n');
    auto line_start = text.rfind('\n', offset == 0 ? 0 : offset - 1);
    std::size_t column = line_start == std::string_view::npos ? offset + 1 : offset - line_start;
    std::ostringstream msg;
    msg << what << ": syntax error at line " << line << ", column " << column << ": "
        << e.what();
    throw ParseError(msg.str());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

ThrottleConfig config_from_json(const json& node, const std::string& where) {
  using namespace jsonf;
  expect_object(node, where);
  check_keys(node, where,
             {"id", "baseline", "cpu_limit", "memory_limit_gib", "disk_limit", "network_limit",
              "pricing"});
  ThrottleConfig c;
  c.id = required_string(node, "id", where);
  c.baseline = optional_bool(node, "baseline", where).value_or(false);
  c.cpu_limit = optional_number(node, "cpu_limit", where);
  c.memory_limit_gib = optional_number(node, "memory_limit_gib", where);
  if (auto* d = optional_object(node, "disk_limit", where)) {
    const std::string w = where + ".disk_limit";
    check_keys(*d, w, {"iops", "throughput_kbps"});
    c.disk_limit = DiskLimit{required_number(*d, "iops", w), required_number(*d, "throughput_kbps", w)};
  }
  if (auto* n = optional_object(node, "network_limit", where)) {
    const std::string w = where + ".network_limit";
    check_keys(*n, w, {"download_kbps", "upload_kbps"});
    c.network_limit =
        NetworkLimit{required_number(*n, "download_kbps", w), required_number(*n, "upload_kbps", w)};
  }
  if (auto* p = optional_object(node, "pricing", where)) {
    const std::string w = where + ".pricing";
    check_keys(*p, w, {"spot_usd_per_hour", "ondemand_usd_per_hour"});
    c.pricing = Pricing{required_number(*p, "spot_usd_per_hour", w),
                        required_number(*p, "ondemand_usd_per_hour", w)};
  }
  return c;
}

json config_to_json(const ThrottleConfig& c) {
  json o;
  o["id"] = c.id;
  if (c.baseline) o["baseline"] = true;
  if (c.cpu_limit) o["cpu_limit"] = *c.cpu_limit;
  if (c.memory_limit_gib) o["memory_limit_gib"] = *c.memory_limit_gib;
  if (c.disk_limit)
    o["disk_limit"] = {{"iops", c.disk_limit->iops},
                       {"throughput_kbps", c.disk_limit->throughput_kbps}};
  if (c.network_limit)
    o["network_limit"] = {{"download_kbps", c.network_limit->download_kbps},
                          {"upload_kbps", c.network_limit->upload_kbps}};
  if (c.pricing)
    o["pricing"] = {{"spot_usd_per_hour", c.pricing->spot_usd_per_hour},
                    {"ondemand_usd_per_hour", c.pricing->ondemand_usd_per_hour}};
  return o;
}

namespace {

RuntimeSettings runtime_from_json(const json& node, const std::string& where) {
  using namespace jsonf;
  expect_object(node, where);
  check_keys(node, where,
             {"program", "run_args", "cpu_args", "memory_args", "disk_args", "env_args",
              "command_args", "kill_args", "disk_device", "environment_exit_codes",
              "shaper_command", "shaper_reset_command", "network_interface"});
  RuntimeSettings r;
  if (auto v = optional_string(node, "program", where)) r.program = *v;
  if (auto v = optional_string_list(node, "run_args", where)) r.run_args = *v;
  if (auto v = optional_string_list(node, "cpu_args", where)) r.cpu_args = *v;
  if (auto v = optional_string_list(node, "memory_args", where)) r.memory_args = *v;
  if (auto v = optional_string_list(node, "disk_args", where)) r.disk_args = *v;
  if (auto v = optional_string_list(node, "env_args", where)) r.env_args = *v;
  if (auto v = optional_string_list(node, "command_args", where)) r.command_args = *v;
  if (auto v = optional_string_list(node, "kill_args", where)) r.kill_args = *v;
  if (auto v = optional_string(node, "disk_device", where)) r.disk_device = *v;
  if (node.contains("environment_exit_codes")) {
    const auto& codes = node.at("environment_exit_codes");
    if (!codes.is_array()) throw ParseError(where + ".environment_exit_codes: expected a list");
    r.environment_exit_codes.clear();
    for (const auto& c : codes) {
      if (!c.is_number_integer())
        throw ParseError(where + ".environment_exit_codes: expected integers");
      r.environment_exit_codes.push_back(c.get<int>());
    }
  }
  r.shaper_command = optional_string(node, "shaper_command", where);
  r.shaper_reset_command = optional_string(node, "shaper_reset_command", where);
  if (auto v = optional_string(node, "network_interface", where)) r.network_interface = *v;
  return r;
}

json runtime_to_json(const RuntimeSettings& r) {
  json o;
  o["program"] = r.program;
  o["run_args"] = r.run_args;
  o["cpu_args"] = r.cpu_args;
  o["memory_args"] = r.memory_args;
  o["disk_args"] = r.disk_args;
  o["env_args"] = r.env_args;
  o["command_args"] = r.command_args;
  o["kill_args"] = r.kill_args;
  o["disk_device"] = r.disk_device;
  o["environment_exit_codes"] = r.environment_exit_codes;
  if (r.shaper_command) o["shaper_command"] = *r.shaper_command;
  if (r.shaper_reset_command) o["shaper_reset_command"] = *r.shaper_reset_command;
  o["network_interface"] = r.network_interface;
  return o;
}

}  // namespace

ExperimentPlan plan_from_json(const json& doc, const PlanParseOptions& options) {
  using namespace jsonf;
  const std::string where = "plan";
  expect_object(doc, where);
  std::vector<std::string> keys = {"project_name",    "suite_command", "workdir",
                                   "container_image", "result_glob",   "matrix",
                                   "configs",         "runs_per_config", "timeout_seconds",
                                   "seed",            "runtime"};
  keys.insert(keys.end(), options.extra_keys.begin(), options.extra_keys.end());
  check_keys(doc, where, keys);

  ExperimentPlan plan;
  plan.project_name = required_string(doc, "project_name", where);
  if (options.require_execution_fields) {
    plan.suite_command = required_string(doc, "suite_command", where);
    plan.result_glob = required_string(doc, "result_glob", where);
  } else {
    plan.suite_command = optional_string(doc, "suite_command", where).value_or("");
    plan.result_glob = optional_string(doc, "result_glob", where).value_or("");
  }
  std::filesystem::path workdir = optional_string(doc, "workdir", where).value_or(".");
  plan.workdir = workdir.is_absolute() ? workdir : (options.base_dir / workdir).lexically_normal();
  plan.container_image = optional_string(doc, "container_image", where);

  // "matrix" names a preset; "configs" lists inline configs or preset names.
  // Both may appear; presets expand in place, in document order.
  if (auto name = optional_string(doc, "matrix", where)) {
    auto preset = builtin_matrix(*name);
    if (!preset) throw ValidationError("plan.matrix: unknown preset '" + *name + "'");
    plan.configs = std::move(*preset);
  }
  if (doc.contains("configs")) {
    const auto& list = doc.at("configs");
    if (!list.is_array()) throw ParseError("plan.configs: expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = "plan.configs[" + std::to_string(i) + "]";
      if (list[i].is_string()) {
        auto preset = builtin_matrix(list[i].get<std::string>());
        if (!preset)
          throw ValidationError(w + ": unknown preset '" + list[i].get<std::string>() + "'");
        plan.configs.insert(plan.configs.end(), preset->begin(), preset->end());
      } else {
        plan.configs.push_back(config_from_json(list[i], w));
      }
    }
  }
  if (auto runs = optional_integer(doc, "runs_per_config", where)) plan.runs_per_config = *runs;
  if (auto t = optional_number(doc, "timeout_seconds", where)) plan.timeout_seconds = *t;
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ParseError("plan.seed: expected a non-negative integer");
    plan.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("runtime")) plan.runtime = runtime_from_json(doc.at("runtime"), "plan.runtime");

  validate_plan(plan);
  return plan;
}

ExperimentPlan parse_plan_text(std::string_view text, const PlanParseOptions& options) {
  return plan_from_json(parse_json_document(text, "plan"), options);
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  PlanParseOptions options;
  options.base_dir = path.parent_path().empty() ? "." : path.parent_path();
  try {
    return plan_from_json(parse_json_document(read_text_file(path), path.string()), options);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json plan_to_json(const ExperimentPlan& plan) {
  json o;
  o["project_name"] = plan.project_name;
  o["suite_command"] = plan.suite_command;
  o["workdir"] = plan.workdir.string();
  if (plan.container_image) o["container_image"] = *plan.container_image;
  o["result_glob"] = plan.result_glob;
  o["configs"] = json::array();
  for (const auto& c : plan.configs) o["configs"].push_back(config_to_json(c));
  o["runs_per_config"] = plan.runs_per_config;
  o["timeout_seconds"] = plan.timeout_seconds;
  if (plan.seed) o["seed"] = *plan.seed;
  o["runtime"] = runtime_to_json(plan.runtime);
  return o;
}

}  // namespace raftlab
