#include "raftlab/records.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "json_fields.hpp"
#include "raftlab/error.hpp"

namespace raftlab {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Validity v) noexcept {
  return v == Validity::Valid ? "valid" : "catastrophic";
}

std::string_view to_string(TestStatus s) noexcept {
  return s == TestStatus::Pass ? "pass" : "fail";
}

Timestamp Timestamp::now() {
  using namespace std::chrono;
  return {duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count()};
}

std::string Timestamp::to_iso8601() const {
  using namespace std::chrono;
  const sys_time<milliseconds> tp{milliseconds{unix_millis}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(hms.hours().count()),
                int(hms.minutes().count()), int(hms.seconds().count()),
                int(hms.subseconds().count()));
  return buf;
}

Timestamp Timestamp::parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0;
  int h = 0, mi = 0, s = 0, ms = 0;
  const std::string copy(text);
  char z = 0;
  int consumed = 0;
  if (std::sscanf(copy.c_str(), "%4d-%2u-%2uT%2d:%2d:%2d.%3d%c%n", &y, &mo, &d, &h, &mi, &s, &ms,
                  &z, &consumed) != 8 ||
      z != 'Z' || consumed != static_cast<int>(copy.size()) || copy.size() != 24)
    throw ParseError("malformed timestamp '" + copy + "'");
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59)
    throw ParseError("timestamp out of range '" + copy + "'");
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{ms};
  return {tp.time_since_epoch().count()};
}

std::vector<TestOutcome> merge_duplicate_outcomes(std::vector<TestOutcome> outcomes) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<TestOutcome> merged;
  merged.reserve(outcomes.size());
  for (auto& o : outcomes) {
    auto [it, inserted] = slot.try_emplace(o.test_id, merged.size());
    if (inserted)
      merged.push_back(std::move(o));
    else
      merged[it->second] = std::move(o);
  }
  return merged;
}

void validate_record(const RunRecord& r) {
  if (r.config_id.empty()) throw ValidationError("record has an empty config_id");
  if (r.run_index < 0) throw ValidationError("record run_index must be >= 0");
  if (!(std::isfinite(r.duration_seconds) && r.duration_seconds >= 0.0))
    throw ValidationError("record duration_seconds must be non-negative");
  if (r.valid() && r.outcomes.empty())
    throw ValidationError("valid record for '" + r.config_id + "' #" +
                          std::to_string(r.run_index) + " has no outcomes");
  if (!r.valid() && !r.outcomes.empty())
    throw ValidationError("catastrophic record carries outcomes");
  std::unordered_map<std::string_view, int> seen;
  for (const auto& o : r.outcomes) {
    if (o.test_id.empty()) throw ValidationError("outcome with empty test_id");
    if (++seen[o.test_id] > 1)
      throw ValidationError("duplicate test_id '" + o.test_id + "' within one run");
    if (o.duration_seconds && !(std::isfinite(*o.duration_seconds) && *o.duration_seconds >= 0.0))
      throw ValidationError("outcome duration_seconds must be non-negative");
  }
}

ordered_json record_to_json(const RunRecord& r) {
  ordered_json o;
  o["project_name"] = r.project_name;
  o["config_id"] = r.config_id;
  o["run_index"] = r.run_index;
  o["started_at"] = r.started_at.to_iso8601();
  o["duration_seconds"] = r.duration_seconds;
  o["exit_code"] = r.exit_code;
  o["validity"] = to_string(r.validity);
  auto& list = o["outcomes"] = ordered_json::array();
  for (const auto& t : r.outcomes) {
    ordered_json e;
    e["test_id"] = t.test_id;
    e["status"] = to_string(t.status);
    if (t.failure_kind) e["failure_kind"] = *t.failure_kind;
    if (t.duration_seconds) e["duration_seconds"] = *t.duration_seconds;
    list.push_back(std::move(e));
  }
  return o;
}

RunRecord record_from_json(const json& node) {
  using namespace jsonf;
  const std::string where = "record";
  expect_object(node, where);
  check_keys(node, where,
             {"project_name", "config_id", "run_index", "started_at", "duration_seconds",
              "exit_code", "validity", "outcomes"});
  RunRecord r;
  r.project_name = required_string(node, "project_name", where);
  r.config_id = required_string(node, "config_id", where);
  r.run_index = required_integer(node, "run_index", where);
  r.started_at = Timestamp::parse_iso8601(required_string(node, "started_at", where));
  r.duration_seconds = required_number(node, "duration_seconds", where);
  r.exit_code = static_cast<int>(required_integer(node, "exit_code", where));
  const auto validity = required_string(node, "validity", where);
  if (validity == "valid")
    r.validity = Validity::Valid;
  else if (validity == "catastrophic")
    r.validity = Validity::Catastrophic;
  else
    throw ParseError("record.validity: unknown value '" + validity + "'");
  const auto& list = required(node, "outcomes", where);
  if (!list.is_array()) throw ParseError("record.outcomes: expected a list");
  r.outcomes.reserve(list.size());
  for (const auto& e : list) {
    const std::string w = "record.outcomes[]";
    expect_object(e, w);
    check_keys(e, w, {"test_id", "status", "failure_kind", "duration_seconds"});
    TestOutcome t;
    t.test_id = required_string(e, "test_id", w);
    const auto status = required_string(e, "status", w);
    if (status == "pass")
      t.status = TestStatus::Pass;
    else if (status == "fail")
      t.status = TestStatus::Fail;
    else
      throw ParseError(w + ".status: unknown value '" + status + "'");
    t.failure_kind = optional_string(e, "failure_kind", w);
    t.duration_seconds = optional_number(e, "duration_seconds", w);
    r.outcomes.push_back(std::move(t));
  }
  validate_record(r);
  return r;
}

std::string serialize_record(const RunRecord& record) {
  // Report files are not always UTF-8; stray bytes become U+FFFD.
  return record_to_json(record).dump(-1, ' ', false, json::error_handler_t::replace);
}

RunRecord deserialize_record(std::string_view line) {
  json node;
  try {
    node = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what());
  }
  return record_from_json(node);
}

}  // namespace raftlab
