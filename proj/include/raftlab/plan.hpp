#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace raftlab {

struct DiskLimit {
  double iops = 0.0;             // operations per second
  double throughput_kbps = 0.0;  // kilobits per second

  bool operator==(const DiskLimit&) const = default;
};

struct NetworkLimit {
  double download_kbps = 0.0;
  double upload_kbps = 0.0;

  bool operator==(const NetworkLimit&) const = default;
};

struct Pricing {
  double spot_usd_per_hour = 0.0;
  double ondemand_usd_per_hour = 0.0;

  bool operator==(const Pricing&) const = default;
};

enum class PricingTier { Spot, OnDemand };

std::string_view to_string(PricingTier tier) noexcept;
std::optional<PricingTier> parse_pricing_tier(std::string_view text) noexcept;

/// One resource-availability configuration. Absent limits mean unrestricted.
struct ThrottleConfig {
  std::string id;
  bool baseline = false;
  std::optional<double> cpu_limit;         // cores, fractional
  std::optional<double> memory_limit_gib;  // GiB
  std::optional<DiskLimit> disk_limit;
  std::optional<NetworkLimit> network_limit;
  std::optional<Pricing> pricing;

  bool has_any_limit() const noexcept {
    return cpu_limit || memory_limit_gib || disk_limit || network_limit;
  }
  std::optional<double> hourly_rate(PricingTier tier) const noexcept;

  bool operator==(const ThrottleConfig&) const = default;
};

/// Container runtime invocation template. Argument groups whose limit is
/// absent are dropped; placeholders are substituted per run. See
/// docs/plan-format.md for the placeholder list.
struct RuntimeSettings {
  std::string program = "docker";
  std::vector<std::string> run_args = {"run", "--rm", "--name", "{container_name}",
                                       "--workdir", "{workdir}", "--volume",
                                       "{workdir}:{workdir}"};
  std::vector<std::string> cpu_args = {"--cpus={cpus}"};
  std::vector<std::string> memory_args = {"--memory={memory_bytes}",
                                          "--memory-swap={memory_bytes}"};
  std::vector<std::string> disk_args = {
      "--device-read-iops={disk_device}:{iops}", "--device-write-iops={disk_device}:{iops}",
      "--device-read-bps={disk_device}:{disk_bps}", "--device-write-bps={disk_device}:{disk_bps}"};
  std::vector<std::string> env_args = {"--env", "{env}"};
  std::vector<std::string> command_args = {"{image}", "/bin/sh", "-c", "{command}"};
  std::vector<std::string> kill_args = {"kill", "{container_name}"};
  std::string disk_device = "/dev/sda";
  std::vector<int> environment_exit_codes = {125};

  // Network shaping runs through an external command (executed with
  // /bin/sh -c) before the suite; the reset command runs afterwards.
  std::optional<std::string> shaper_command;
  std::optional<std::string> shaper_reset_command;
  std::string network_interface = "eth0";

  bool operator==(const RuntimeSettings&) const = default;
};

struct ExperimentPlan {
  std::string project_name;
  std::string suite_command;
  std::filesystem::path workdir = ".";
  std::optional<std::string> container_image;
  std::string result_glob;
  std::vector<ThrottleConfig> configs;
  std::int64_t runs_per_config = 300;
  double timeout_seconds = 3600.0;
  std::optional<std::uint64_t> seed;
  RuntimeSettings runtime;

  const ThrottleConfig& baseline() const;
  const ThrottleConfig* find(std::string_view config_id) const noexcept;

  bool operator==(const ExperimentPlan&) const = default;
};

/// The sixteen Phase I throttling configurations, baseline first. Cells the
/// original matrix leaves empty inherit the baseline allotment (4 cores,
/// 16 GiB, unrestricted disk and network).
std::vector<ThrottleConfig> builtin_phase1();

/// The twelve Fargate configurations, ascending by on-demand price, with
/// spot and on-demand USD/hour. "aws-12" (4 cores / 16 GiB) is the baseline.
std::vector<ThrottleConfig> builtin_phase2();

std::optional<std::vector<ThrottleConfig>> builtin_matrix(std::string_view name);

/// Throws ValidationError naming the first violated invariant.
void validate_config(const ThrottleConfig& config);
void validate_configs(std::vector<ThrottleConfig>& configs);
void validate_plan(ExperimentPlan& plan);

struct PlanParseOptions {
  // Scenario documents reuse the plan syntax but need no suite command.
  bool require_execution_fields = true;
  std::vector<std::string> extra_keys;
  std::filesystem::path base_dir = ".";
};

ExperimentPlan plan_from_json(const nlohmann::json& doc, const PlanParseOptions& options = {});
ExperimentPlan parse_plan_text(std::string_view text, const PlanParseOptions& options = {});
ExperimentPlan load_plan(const std::filesystem::path& path);

nlohmann::json config_to_json(const ThrottleConfig& config);
ThrottleConfig config_from_json(const nlohmann::json& node, const std::string& where);
nlohmann::json plan_to_json(const ExperimentPlan& plan);

/// Reads a JSON document, reporting syntax errors with line and column.
nlohmann::json parse_json_document(std::string_view text, std::string_view what);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace raftlab
