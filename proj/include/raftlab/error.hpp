#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace raftlab {

enum class ErrorKind {
  Parse,         // malformed input document
  Validation,    // document parsed but violates an invariant
  Io,            // file missing, unreadable or unwritable
  Environment,   // container runtime missing, image pull failure, spawn failure
  Precondition,  // analysis input lacks something it needs (e.g. baseline runs)
  Domain,        // numeric argument outside its domain
  Duplicate,     // (config_id, run_index) already present in a results log
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(ErrorKind::Parse, m) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error(ErrorKind::Validation, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};
struct EnvironmentError : Error {
  explicit EnvironmentError(const std::string& m) : Error(ErrorKind::Environment, m) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& m) : Error(ErrorKind::Precondition, m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error(ErrorKind::Domain, m) {}
};
struct DuplicateRecordError : Error {
  explicit DuplicateRecordError(const std::string& m) : Error(ErrorKind::Duplicate, m) {}
};

// Non-fatal diagnostics (torn log lines, unenforced limits, corrupt report
// files). The default sink writes "raftlab: warning: ..." to stderr; an
// empty sink restores it.
using WarningSink = std::function<void(std::string_view)>;

void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace raftlab
