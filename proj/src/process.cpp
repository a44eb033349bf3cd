#include "raftlab/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "raftlab/error.hpp"

extern char** environ;

namespace raftlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

// Polls for exit until `limit` seconds have elapsed since `start`.
std::optional<int> wait_until(pid_t pid, Clock::time_point start, double limit) {
  auto pause = std::chrono::microseconds(200);
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) return decode_status(status);
    if (r < 0 && errno != EINTR) throw EnvironmentError(std::string("waitpid: ") + std::strerror(errno));
    if (limit > 0.0 && seconds_since(start) >= limit) return std::nullopt;
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::microseconds(20000));
  }
}

}  // namespace

std::optional<std::filesystem::path> find_program(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return std::filesystem::path(name);
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::string_view paths = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
  while (true) {
    const auto colon = paths.find(':');
    std::filesystem::path dir(std::string(paths.substr(0, colon)));
    if (dir.empty()) dir = ".";
    const auto candidate = dir / name;
    if (::access(candidate.c_str(), X_OK) == 0 && !std::filesystem::is_directory(candidate))
      return candidate;
    if (colon == std::string_view::npos) break;
    paths.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

ProcessResult run_process(const ProcessSpec& spec) {
  if (spec.argv.empty()) throw EnvironmentError("empty command line");

  std::vector<std::string> env_storage;
  for (char** e = environ; *e; ++e) {
    std::string_view entry(*e);
    bool overridden = false;
    for (const auto& [k, v] : spec.env)
      overridden = overridden || (entry.size() > k.size() && entry.substr(0, k.size()) == k &&
                                  entry[k.size()] == '=');
    if (!overridden) env_storage.emplace_back(entry);
  }
  for (const auto& [k, v] : spec.env) env_storage.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : env_storage) envp.push_back(s.data());
  envp.push_back(nullptr);

  std::vector<std::string> argv_storage = spec.argv;
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());
  argv.push_back(nullptr);

  const std::string output = spec.output_file ? spec.output_file->string() : "/dev/null";
  const std::string cwd = spec.cwd.string();

  // exec failures travel back over a close-on-exec pipe.
  int report[2];
  if (::pipe2(report, O_CLOEXEC) != 0)
    throw EnvironmentError(std::string("pipe: ") + std::strerror(errno));

  const auto start = Clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(report[0]);
    ::close(report[1]);
    throw EnvironmentError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    int stage = 0;
    int err = 0;
    const int out = ::open(output.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    const int in = ::open("/dev/null", O_RDONLY | O_CLOEXEC);
    if (out < 0 || in < 0) {
      stage = 1;
      err = errno;
    } else if (::dup2(in, 0) < 0 || ::dup2(out, 1) < 0 || ::dup2(out, 2) < 0) {
      stage = 1;
      err = errno;
    } else if (::chdir(cwd.c_str()) != 0) {
      stage = 2;
      err = errno;
    } else {
      ::execvpe(argv[0], argv.data(), envp.data());
      stage = 3;
      err = errno;
    }
    int msg[2] = {stage, err};
    [[maybe_unused]] auto n = ::write(report[1], msg, sizeof msg);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(report[1]);
  int msg[2] = {0, 0};
  ssize_t got;
  do {
    got = ::read(report[0], msg, sizeof msg);
  } while (got < 0 && errno == EINTR);
  ::close(report[0]);
  if (got == static_cast<ssize_t>(sizeof msg)) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    std::string what = msg[0] == 1   ? "cannot redirect output to '" + output + "'"
                       : msg[0] == 2 ? "cannot enter working directory '" + cwd + "'"
                                     : "cannot execute '" + spec.argv[0] + "'";
    throw EnvironmentError(what + ": " + std::strerror(msg[1]));
  }

  ProcessResult result;
  auto code = wait_until(pid, start, spec.timeout_seconds);
  if (!code) {
    result.timed_out = true;
    if (spec.on_timeout) {
      try {
        spec.on_timeout();
      } catch (...) {
      }
    }
    ::kill(-pid, SIGTERM);
    code = wait_until(pid, Clock::now(), kTerminateGraceSeconds);
    if (!code) {
      ::kill(-pid, SIGKILL);
      code = wait_until(pid, Clock::now(), 0.0);
    }
  }
  // Reap stragglers the suite left in its group.
  ::kill(-pid, SIGKILL);
  result.exit_code = *code;
  result.duration_seconds = seconds_since(start);
  return result;
}

}  // namespace raftlab
