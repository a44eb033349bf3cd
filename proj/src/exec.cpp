#include "raftlab/exec.hpp"

#include <glob.h>
#include <unistd.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "raftlab/error.hpp"
#include "raftlab/ingest.hpp"
#include "raftlab/process.hpp"

namespace raftlab {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_integer(double v) {
  return std::to_string(static_cast<long long>(std::llround(v)));
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

std::map<std::string, std::string> placeholder_values(const ExperimentPlan& plan,
                                                      const ThrottleConfig& config,
                                                      const std::string& container_name) {
  std::map<std::string, std::string> v;
  v["workdir"] = std::filesystem::absolute(plan.workdir).lexically_normal().string();
  v["image"] = plan.container_image.value_or("");
  v["command"] = plan.suite_command;
  v["container_name"] = container_name;
  v["config_id"] = config.id;
  v["disk_device"] = plan.runtime.disk_device;
  v["iface"] = plan.runtime.network_interface;
  if (config.cpu_limit) v["cpus"] = format_number(*config.cpu_limit);
  if (config.memory_limit_gib)
    v["memory_bytes"] = format_integer(*config.memory_limit_gib * 1024.0 * 1024.0 * 1024.0);
  if (config.disk_limit) {
    v["iops"] = format_integer(config.disk_limit->iops);
    v["disk_kbps"] = format_number(config.disk_limit->throughput_kbps);
    v["disk_bps"] = format_integer(config.disk_limit->throughput_kbps * 1000.0 / 8.0);
  }
  if (config.network_limit) {
    v["down_kbps"] = format_number(config.network_limit->download_kbps);
    v["up_kbps"] = format_number(config.network_limit->upload_kbps);
  }
  return v;
}

void append_expanded(std::vector<std::string>& argv, const std::vector<std::string>& group,
                     const std::map<std::string, std::string>& values) {
  for (const auto& arg : group) argv.push_back(expand_placeholders(arg, values));
}

std::string container_name_for(const ThrottleConfig& config, std::int64_t run_index) {
  return "raftlab-" + std::to_string(::getpid()) + "-" + sanitize(config.id) + "-" +
         std::to_string(run_index);
}

void run_helper(const std::string& command, const std::filesystem::path& cwd, const char* what) {
  ProcessSpec spec;
  spec.argv = {"/bin/sh", "-c", command};
  spec.cwd = cwd;
  spec.timeout_seconds = 60.0;
  const auto result = run_process(spec);
  if (result.timed_out || result.exit_code != 0)
    throw EnvironmentError(std::string(what) + " '" + command + "' failed with exit code " +
                           std::to_string(result.exit_code));
}

void warn_unenforced(const ThrottleConfig& config) {
  if (config.has_any_limit())
    warn("local mode: limits of config '" + config.id +
         "' are declared but not enforced (no container_image in plan)");
}

}  // namespace

std::string expand_placeholders(const std::string& text,
                                const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = text.find('}', open + 1);
    if (close == std::string::npos) break;
    out.append(text, pos, open - pos);
    const std::string key = text.substr(open + 1, close - open - 1);
    auto it = values.find(key);
    if (it != values.end())
      out += it->second;
    else
      out.append(text, open, close - open + 1);
    pos = close + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

std::vector<std::pair<std::string, std::string>> suite_environment(const ExperimentPlan& plan,
                                                                   const ThrottleConfig& config,
                                                                   std::int64_t run_index) {
  std::vector<std::pair<std::string, std::string>> env = {
      {"RAFT_CONFIG_ID", config.id},
      {"RAFT_RUN_INDEX", std::to_string(run_index)},
  };
  if (plan.seed) env.emplace_back("RAFT_SEED", std::to_string(*plan.seed));
  return env;
}

std::vector<std::string> container_command(const ExperimentPlan& plan,
                                           const ThrottleConfig& config, std::int64_t run_index,
                                           const std::string& container_name) {
  const auto& rt = plan.runtime;
  const auto values = placeholder_values(plan, config, container_name);
  std::vector<std::string> argv = {rt.program};
  append_expanded(argv, rt.run_args, values);
  if (config.cpu_limit) append_expanded(argv, rt.cpu_args, values);
  if (config.memory_limit_gib) append_expanded(argv, rt.memory_args, values);
  if (config.disk_limit) append_expanded(argv, rt.disk_args, values);
  for (const auto& [k, v] : suite_environment(plan, config, run_index)) {
    auto with_env = values;
    with_env["env"] = k + "=" + v;
    append_expanded(argv, rt.env_args, with_env);
  }
  append_expanded(argv, rt.command_args, values);
  return argv;
}

std::optional<std::string> shaper_command(const ExperimentPlan& plan, const ThrottleConfig& config) {
  if (!config.network_limit || !plan.runtime.shaper_command) return std::nullopt;
  return expand_placeholders(*plan.runtime.shaper_command, placeholder_values(plan, config, ""));
}

std::vector<std::filesystem::path> matching_reports(const ExperimentPlan& plan) {
  std::filesystem::path pattern(plan.result_glob);
  if (pattern.is_relative()) pattern = plan.workdir / pattern;
  glob_t g{};
  std::vector<std::filesystem::path> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH)
    throw EnvironmentError("cannot expand result_glob '" + pattern.string() + "'");
  return out;
}

RunRecord run_once(const ExperimentPlan& plan, const ThrottleConfig& config,
                   std::int64_t run_index, const ExecOptions& options) {
  if (!std::filesystem::is_directory(plan.workdir))
    throw EnvironmentError("workdir '" + plan.workdir.string() + "' is not a directory");
  const bool containerized = plan.container_image.has_value();
  if (containerized && !find_program(plan.runtime.program))
    throw EnvironmentError("container runtime '" + plan.runtime.program + "' not found on PATH");
  if (!containerized && options.warn_unenforced) warn_unenforced(config);

  // Stale reports from an earlier run must not be attributed to this one.
  for (const auto& stale : matching_reports(plan)) {
    std::error_code ec;
    std::filesystem::remove(stale, ec);
    if (ec) throw EnvironmentError("cannot remove stale report '" + stale.string() + "'");
  }

  ProcessSpec spec;
  spec.cwd = plan.workdir;
  spec.timeout_seconds = plan.timeout_seconds;
  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    spec.output_file =
        *options.output_dir / (sanitize(config.id) + "-" + std::to_string(run_index) + ".log");
  }

  std::optional<std::string> shaper;
  if (containerized) {
    const std::string name = container_name_for(config, run_index);
    spec.argv = container_command(plan, config, run_index, name);
    const auto values = placeholder_values(plan, config, name);
    std::vector<std::string> kill = {plan.runtime.program};
    append_expanded(kill, plan.runtime.kill_args, values);
    spec.on_timeout = [kill, cwd = plan.workdir] {
      ProcessSpec k;
      k.argv = kill;
      k.cwd = cwd;
      k.timeout_seconds = 30.0;
      run_process(k);
    };
    shaper = shaper_command(plan, config);
    if (config.network_limit && !shaper)
      warn("config '" + config.id + "' limits network but the plan has no shaper_command");
  } else {
    spec.argv = {"/bin/sh", "-c", plan.suite_command};
    spec.env = suite_environment(plan, config, run_index);
  }

  RunRecord record;
  record.project_name = plan.project_name;
  record.config_id = config.id;
  record.run_index = run_index;
  record.started_at = Timestamp::now();

  if (shaper) run_helper(*shaper, plan.workdir, "network shaper");
  ProcessResult result;
  try {
    result = run_process(spec);
  } catch (...) {
    if (shaper && plan.runtime.shaper_reset_command) {
      try {
        run_helper(expand_placeholders(*plan.runtime.shaper_reset_command,
                                       placeholder_values(plan, config, "")),
                   plan.workdir, "network shaper reset");
      } catch (...) {
      }
    }
    throw;
  }
  if (shaper && plan.runtime.shaper_reset_command)
    run_helper(expand_placeholders(*plan.runtime.shaper_reset_command,
                                   placeholder_values(plan, config, "")),
               plan.workdir, "network shaper reset");

  if (containerized) {
    for (int code : plan.runtime.environment_exit_codes)
      if (!result.timed_out && result.exit_code == code)
        throw EnvironmentError("container runtime '" + plan.runtime.program +
                               "' failed to start the job (exit code " + std::to_string(code) +
                               ")");
  }

  record.duration_seconds = result.duration_seconds;
  record.exit_code = result.exit_code;

  std::vector<TestOutcome> outcomes;
  if (!result.timed_out) {
    for (const auto& report : matching_reports(plan)) {
      try {
        auto parsed = parse_report_file(report);
        outcomes.insert(outcomes.end(), std::make_move_iterator(parsed.begin()),
                        std::make_move_iterator(parsed.end()));
      } catch (const Error& e) {
        warn(config.id + " #" + std::to_string(run_index) + ": skipping unreadable report: " +
             e.what());
      }
    }
  }
  outcomes = merge_duplicate_outcomes(std::move(outcomes));
  if (result.timed_out || outcomes.empty()) {
    record.validity = Validity::Catastrophic;
  } else {
    record.validity = Validity::Valid;
    record.outcomes = std::move(outcomes);
  }
  return record;
}

ExecSummary execute_plan(const ExperimentPlan& plan, ResultsLog& sink, const ExecOptions& options,
                         const ExecutionObserver& observer) {
  ExecSummary summary;
  ExecOptions per_run = options;
  per_run.warn_unenforced = false;
  std::set<std::string> warned;
  sink.refresh();
  for (const auto& config : plan.configs) {
    for (std::int64_t i = 0; i < plan.runs_per_config; ++i) {
      if (sink.contains(plan.project_name, config.id, i)) {
        ++summary.jobs_skipped;
        if (observer)
          observer({ExecutionEvent::Kind::Skipped, config.id, i, std::chrono::steady_clock::now()});
        continue;
      }
      if (!plan.container_image && options.warn_unenforced && warned.insert(config.id).second)
        warn_unenforced(config);
      if (observer)
        observer({ExecutionEvent::Kind::Started, config.id, i, std::chrono::steady_clock::now()});
      RunRecord record = run_once(plan, config, i, per_run);
      sink.append(record);
      ++summary.jobs_run;
      if (!record.valid()) {
        ++summary.catastrophic_count;
        ++summary.catastrophic_by_config[config.id];
      }
      if (observer)
        observer({ExecutionEvent::Kind::Finished, config.id, i, std::chrono::steady_clock::now(),
                  &record});
    }
  }
  return summary;
}

}  // namespace raftlab
