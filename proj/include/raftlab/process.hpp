#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace raftlab {

struct ProcessSpec {
  std::vector<std::string> argv;
  std::filesystem::path cwd = ".";
  std::vector<std::pair<std::string, std::string>> env;  // added to the inherited environment
  std::optional<std::filesystem::path> output_file;       // stdout+stderr; /dev/null when absent
  double timeout_seconds = 0.0;                           // <= 0 disables the deadline
  std::function<void()> on_timeout;                       // runs before the process group is killed
};

struct ProcessResult {
  int exit_code = 0;  // 128 + signal number when killed by a signal
  bool timed_out = false;
  double duration_seconds = 0.0;
};

/// Seconds between SIGTERM and SIGKILL after a deadline passes.
inline constexpr double kTerminateGraceSeconds = 2.0;

/// Runs argv in its own process group and waits for it, enforcing the
/// deadline. Throws EnvironmentError when the program cannot be started.
ProcessResult run_process(const ProcessSpec& spec);

/// Resolves a program name against PATH (names containing '/' are checked
/// as paths).
std::optional<std::filesystem::path> find_program(const std::string& name);

}  // namespace raftlab
