#include "raftlab/error.hpp"

#include <iostream>
#include <mutex>

namespace raftlab {

namespace {

std::mutex g_sink_mutex;

void default_sink(std::string_view message) {
  std::cerr << "raftlab: warning: " << message << '\n';
}

WarningSink& sink_slot() {
  static WarningSink sink = default_sink;
  return sink;
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Environment: return "environment error";
    case ErrorKind::Precondition: return "precondition failed";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Duplicate: return "duplicate record";
  }
  return "error";
}

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_sink_mutex);
  sink_slot() = sink ? std::move(sink) : WarningSink(default_sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_sink_mutex);
  if (sink_slot()) sink_slot()(message);
}

}  // namespace raftlab
