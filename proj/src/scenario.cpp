#include <algorithm>
#include <set>

#include "json_fields.hpp"
#include "raftlab/error.hpp"
#include "raftlab/sim.hpp"

namespace raftlab {

using nlohmann::json;

namespace {

// Expands {"default": x, "<config>": y, ...} (or a bare value) to one entry
// per config. Configs without a value are omitted unless require_all.
template <typename T, typename Read>
std::map<std::string, T> per_config_values(const json& node, const std::string& where,
                                           const std::vector<ThrottleConfig>& configs, Read read,
                                           bool require_all) {
  std::map<std::string, T> out;
  std::optional<T> fallback;
  if (!node.is_object() || node.contains("mean_seconds")) {
    fallback = read(node, where);
  } else {
    std::set<std::string> ids;
    for (const auto& c : configs) ids.insert(c.id);
    for (const auto& item : node.items()) {
      const std::string w = where + "." + item.key();
      if (item.key() == "default") {
        fallback = read(item.value(), w);
      } else {
        if (!ids.count(item.key()))
          throw ValidationError(where + ": unknown config '" + item.key() + "'");
        out[item.key()] = read(item.value(), w);
      }
    }
  }
  for (const auto& c : configs) {
    if (out.count(c.id)) continue;
    if (fallback)
      out[c.id] = *fallback;
    else if (require_all)
      throw ValidationError(where + ": no value for config '" + c.id + "' and no default");
  }
  return out;
}

double read_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

std::int64_t read_count(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  return v.get<std::int64_t>();
}

DurationModel read_duration(const json& v, const std::string& where) {
  using namespace jsonf;
  expect_object(v, where);
  check_keys(v, where, {"mean_seconds", "jitter_fraction"});
  DurationModel d;
  d.mean_seconds = required_number(v, "mean_seconds", where);
  d.jitter_fraction = optional_number(v, "jitter_fraction", where).value_or(0.0);
  return d;
}

SyntheticTest read_test(const json& node, const std::string& where,
                        const std::vector<ThrottleConfig>& configs,
                        const ThrottleConfig& baseline) {
  using namespace jsonf;
  expect_object(node, where);
  check_keys(node, where, {"test_id", "fail_prob", "fail_count", "curve"});
  SyntheticTest t;
  t.test_id = required_string(node, "test_id", where);

  // Precedence per config: fail_count, explicit fail_prob key, curve,
  // fail_prob default.
  std::map<std::string, double> curve_values;
  if (const json* curve = optional_object(node, "curve", where)) {
    const std::string w = where + ".curve";
    check_keys(*curve, w, {"floor", "ceiling", "midpoint", "steepness", "resources"});
    CurveParams p;
    p.floor = required_number(*curve, "floor", w);
    p.ceiling = required_number(*curve, "ceiling", w);
    p.midpoint = optional_number(*curve, "midpoint", w).value_or(p.midpoint);
    p.steepness = optional_number(*curve, "steepness", w).value_or(p.steepness);
    p.validate();
    const auto resources =
        optional_string_list(*curve, "resources", w)
            .value_or(std::vector<std::string>{"cpu", "memory", "disk", "network"});
    for (const auto& c : configs)
      curve_values[c.id] = raft_curve(resource_level(c, baseline, resources), p);
  }
  std::map<std::string, double> explicit_values;
  std::optional<double> fallback;
  if (node.contains("fail_prob")) {
    const auto& fp = node.at("fail_prob");
    const std::string w = where + ".fail_prob";
    if (fp.is_object()) {
      for (const auto& item : fp.items()) {
        if (item.key() == "default") {
          fallback = read_number(item.value(), w + ".default");
          continue;
        }
        const bool known = std::any_of(configs.begin(), configs.end(),
                                       [&](const ThrottleConfig& c) { return c.id == item.key(); });
        if (!known) throw ValidationError(w + ": unknown config '" + item.key() + "'");
        explicit_values[item.key()] = read_number(item.value(), w + "." + item.key());
      }
    } else {
      fallback = read_number(fp, w);
    }
  }
  for (const auto& c : configs) {
    if (auto e = explicit_values.find(c.id); e != explicit_values.end())
      t.fail_prob[c.id] = e->second;
    else if (auto cv = curve_values.find(c.id); cv != curve_values.end())
      t.fail_prob[c.id] = cv->second;
    else if (fallback)
      t.fail_prob[c.id] = *fallback;
  }
  if (node.contains("fail_count")) {
    const auto& fc = node.at("fail_count");
    if (!fc.is_object()) throw ParseError(where + ".fail_count: expected an object");
    t.fail_count = per_config_values<std::int64_t>(fc, where + ".fail_count", configs, read_count,
                                                   false);
  }
  for (const auto& c : configs)
    if (!t.fail_prob.count(c.id) && !t.fail_count.count(c.id))
      throw ValidationError(where + ": test '" + t.test_id + "' has no behaviour for config '" +
                            c.id + "'");
  return t;
}

}  // namespace

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  using namespace jsonf;
  PlanParseOptions options;
  options.require_execution_fields = false;
  options.extra_keys = {"suite", "alpha", "fdr_family"};
  options.base_dir = base_dir;
  const ExperimentPlan plan = plan_from_json(doc, options);

  Scenario s;
  s.project_name = plan.project_name;
  s.configs = plan.configs;
  s.runs_per_config = plan.runs_per_config;
  s.seed = plan.seed.value_or(0);
  s.params.baseline_id = plan.baseline().id;
  if (auto a = optional_number(doc, "alpha", "scenario")) s.params.alpha = *a;
  if (auto f = optional_string(doc, "fdr_family", "scenario")) {
    auto family = parse_fdr_family(*f);
    if (!family) throw ValidationError("scenario.fdr_family: unknown family '" + *f + "'");
    s.params.fdr_family = *family;
  }
  s.params.validate();

  const json& suite = required(doc, "suite", "scenario");
  const std::string where = "scenario.suite";
  expect_object(suite, where);
  check_keys(suite, where, {"tests", "catastrophic_prob", "duration_model"});
  s.suite.project_name = plan.project_name;

  if (suite.contains("duration_model"))
    s.suite.duration_model = per_config_values<DurationModel>(
        suite.at("duration_model"), where + ".duration_model", s.configs, read_duration, true);
  else
    for (const auto& c : s.configs) s.suite.duration_model[c.id] = DurationModel{};
  if (suite.contains("catastrophic_prob"))
    s.suite.catastrophic_prob = per_config_values<double>(
        suite.at("catastrophic_prob"), where + ".catastrophic_prob", s.configs, read_number, false);

  const json& tests = required(suite, "tests", where);
  if (!tests.is_array()) throw ParseError(where + ".tests: expected a list");
  const ThrottleConfig& baseline = plan.baseline();
  for (std::size_t i = 0; i < tests.size(); ++i)
    s.suite.tests.push_back(
        read_test(tests[i], where + ".tests[" + std::to_string(i) + "]", s.configs, baseline));
  s.suite.validate();
  for (const auto& t : s.suite.tests)
    for (const auto& [config, n] : t.fail_count)
      if (n > s.runs_per_config)
        throw ValidationError("test '" + t.test_id + "' fail_count for '" + config +
                              "' exceeds runs_per_config");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  try {
    return scenario_from_json(parse_json_document(read_text_file(path), path.string()), base);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace raftlab
