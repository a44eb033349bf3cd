#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "raftlab/records.hpp"

namespace raftlab::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "raftlab-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline TestOutcome pass(const std::string& id) { return {id, TestStatus::Pass, {}, {}}; }
inline TestOutcome fail(const std::string& id, const std::string& kind = "AssertionError") {
  return {id, TestStatus::Fail, kind, {}};
}

inline RunRecord valid_run(const std::string& config, std::int64_t index,
                           std::vector<TestOutcome> outcomes, double duration = 10.0,
                           const std::string& project = "proj") {
  RunRecord r;
  r.project_name = project;
  r.config_id = config;
  r.run_index = index;
  r.started_at = Timestamp{1577836800000 + index * 1000};
  r.duration_seconds = duration;
  r.exit_code = 0;
  for (const auto& o : outcomes)
    if (o.status == TestStatus::Fail) r.exit_code = 1;
  r.outcomes = std::move(outcomes);
  return r;
}

inline RunRecord catastrophic_run(const std::string& config, std::int64_t index,
                                  const std::string& project = "proj") {
  RunRecord r;
  r.project_name = project;
  r.config_id = config;
  r.run_index = index;
  r.started_at = Timestamp{1577836800000 + index * 1000};
  r.duration_seconds = 3.0;
  r.exit_code = 137;
  r.validity = Validity::Catastrophic;
  return r;
}

// Runs of one config in which test `id` fails in the first `fails` runs.
inline std::vector<RunRecord> runs_with_failures(const std::string& config, const std::string& id,
                                                 std::int64_t runs, std::int64_t fails,
                                                 double duration = 10.0,
                                                 std::int64_t first_index = 0) {
  std::vector<RunRecord> out;
  for (std::int64_t i = 0; i < runs; ++i)
    out.push_back(valid_run(config, first_index + i, {i < fails ? fail(id) : pass(id)}, duration));
  return out;
}

inline void append(std::vector<RunRecord>& to, const std::vector<RunRecord>& more) {
  to.insert(to.end(), more.begin(), more.end());
}

}  // namespace raftlab::testing
