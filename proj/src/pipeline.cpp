#include "raftlab/pipeline.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "raftlab/error.hpp"
#include "raftlab/results_log.hpp"
#include "raftlab/sim.hpp"

namespace raftlab {

void write_file_atomic(const std::filesystem::path& path, const std::string& content,
                       bool executable) {
  const std::filesystem::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC,
                        executable ? 0755 : 0644);
  if (fd < 0) throw IoError("cannot write '" + tmp.string() + "': " + std::strerror(errno));
  std::size_t done = 0;
  while (done < content.size()) {
    const ssize_t n = ::write(fd, content.data() + done, content.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      ::unlink(tmp.c_str());
      throw IoError("cannot write '" + tmp.string() + "': " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    throw IoError("cannot flush '" + tmp.string() + "'");
  }
  if (executable) ::chmod(tmp.c_str(), 0755);  // umask may have stripped bits
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmp.c_str());
    throw IoError("cannot replace '" + path.string() + "': " + std::strerror(err));
  }
}

ExecSummary cmd_run(const std::filesystem::path& plan_path,
                    const std::filesystem::path& results_path, const ExecOptions& options,
                    const ExecutionObserver& observer) {
  const ExperimentPlan plan = load_plan(plan_path);
  ResultsLog log(results_path);
  return execute_plan(plan, log, options, observer);
}

std::int64_t cmd_simulate(const std::filesystem::path& scenario_path,
                          const std::filesystem::path& results_path,
                          std::optional<std::uint64_t> seed) {
  const Scenario scenario = load_scenario(scenario_path);
  const auto records = simulate_dataset(scenario, seed.value_or(scenario.seed));
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  write_file_atomic(results_path, out);
  return static_cast<std::int64_t>(records.size());
}

namespace {

// Plans and scenarios share the config syntax; only the matrix matters here.
std::vector<ThrottleConfig> load_configs(const std::filesystem::path& path) {
  PlanParseOptions options;
  options.require_execution_fields = false;
  options.extra_keys = {"suite", "alpha", "fdr_family"};
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  options.base_dir = base;
  return plan_from_json(parse_json_document(read_text_file(path), path.string()), options).configs;
}

}  // namespace

Report analyze_results(const std::filesystem::path& results_path, const AnalysisOptions& options) {
  StatParams params;
  params.alpha = options.alpha;
  params.fdr_family = options.fdr_family;
  PricingTable pricing = builtin_pricing();
  if (options.plan_path) {
    const auto configs = load_configs(*options.plan_path);
    pricing = pricing_from_configs(configs);
    // Validation flags exactly one config as the baseline.
    for (const auto& c : configs)
      if (c.baseline) params.baseline_id = c.id;
  }
  if (options.baseline_id) params.baseline_id = *options.baseline_id;
  const auto records = read_results_log(results_path);
  return build_report(records, params, pricing, options.tier);
}

std::string cmd_analyze(const std::filesystem::path& results_path, const AnalysisOptions& options) {
  return analysis_to_json(analyze_results(results_path, options)).dump(2) + "\n";
}

CostOutput cmd_cost(const std::filesystem::path& results_path, const AnalysisOptions& options) {
  const Report report = analyze_results(results_path, options);
  return {economics_to_text(report), economics_to_json(report).dump(2) + "\n"};
}

ReportOutput cmd_report(const std::filesystem::path& results_path,
                        const std::optional<std::filesystem::path>& out_dir,
                        const AnalysisOptions& options) {
  const Report report = analyze_results(results_path, options);
  ReportOutput out{report_to_text(report), report_to_json(report).dump(2) + "\n"};
  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir->string() + "': " + ec.message());
    write_file_atomic(*out_dir / "report.txt", out.text);
    write_file_atomic(*out_dir / "report.json", out.json);
  }
  return out;
}

void cmd_fixture(const std::filesystem::path& scenario_path, const std::filesystem::path& out_path) {
  write_file_atomic(out_path, fixture_script(load_scenario(scenario_path)), true);
}

}  // namespace raftlab
