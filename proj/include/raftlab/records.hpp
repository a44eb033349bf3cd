#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace raftlab {

enum class TestStatus { Pass, Fail };

struct TestOutcome {
  std::string test_id;
  TestStatus status = TestStatus::Pass;
  std::optional<std::string> failure_kind;
  std::optional<double> duration_seconds;

  bool operator==(const TestOutcome&) const = default;
};

enum class Validity { Valid, Catastrophic };

std::string_view to_string(Validity v) noexcept;
std::string_view to_string(TestStatus s) noexcept;

/// UTC instant with millisecond resolution, serialized as
/// "YYYY-MM-DDTHH:MM:SS.mmmZ".
struct Timestamp {
  std::int64_t unix_millis = 0;

  static Timestamp now();
  std::string to_iso8601() const;
  static Timestamp parse_iso8601(std::string_view text);

  auto operator<=>(const Timestamp&) const = default;
};

/// One complete test-suite invocation.
struct RunRecord {
  std::string project_name;
  std::string config_id;
  std::int64_t run_index = 0;
  Timestamp started_at;
  double duration_seconds = 0.0;
  int exit_code = 0;
  Validity validity = Validity::Valid;
  std::vector<TestOutcome> outcomes;

  bool valid() const noexcept { return validity == Validity::Valid; }
  bool operator==(const RunRecord&) const = default;
};

/// Collapses repeated test ids, keeping the last outcome of each while
/// preserving first-appearance order.
std::vector<TestOutcome> merge_duplicate_outcomes(std::vector<TestOutcome> outcomes);

/// Throws ValidationError if the record breaks a RunRecord invariant.
void validate_record(const RunRecord& record);

nlohmann::ordered_json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& node);

/// Single-line serialization used by the results log (no trailing newline).
std::string serialize_record(const RunRecord& record);
RunRecord deserialize_record(std::string_view line);

}  // namespace raftlab
