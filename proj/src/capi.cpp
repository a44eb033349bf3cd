#include "raftlab/raftlab.h"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>

#include "raftlab/cost.hpp"
#include "raftlab/error.hpp"
#include "raftlab/pipeline.hpp"
#include "raftlab/plan.hpp"
#include "raftlab/stats.hpp"

struct raftlab_plan {
  raftlab::ExperimentPlan plan;
};

struct raftlab_options {
  raftlab::AnalysisOptions options;
};

namespace {

thread_local std::string g_last_error;

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

raftlab_status status_of(raftlab::ErrorKind kind) {
  using raftlab::ErrorKind;
  switch (kind) {
    case ErrorKind::Parse: return RAFTLAB_ERR_PARSE;
    case ErrorKind::Validation: return RAFTLAB_ERR_VALIDATION;
    case ErrorKind::Io: return RAFTLAB_ERR_IO;
    case ErrorKind::Environment: return RAFTLAB_ERR_ENVIRONMENT;
    case ErrorKind::Precondition: return RAFTLAB_ERR_PRECONDITION;
    case ErrorKind::Domain: return RAFTLAB_ERR_DOMAIN;
    case ErrorKind::Duplicate: return RAFTLAB_ERR_DUPLICATE;
  }
  return RAFTLAB_ERR_INTERNAL;
}

template <typename F>
raftlab_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return RAFTLAB_OK;
  } catch (const raftlab::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const InvalidArgument& e) {
    g_last_error = e.what();
    return RAFTLAB_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RAFTLAB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RAFTLAB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RAFTLAB_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgument(std::string(name) + " must not be NULL");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

// Hands both strings to the caller or neither.
void emit(char** text_out, const std::string& text, char** json_out, const std::string& json) {
  char* t = text_out ? copy_string(text) : nullptr;
  char* j = nullptr;
  try {
    j = json_out ? copy_string(json) : nullptr;
  } catch (...) {
    std::free(t);
    throw;
  }
  if (text_out) *text_out = t;
  if (json_out) *json_out = j;
}

const raftlab::AnalysisOptions& options_or_default(const raftlab_options* o) {
  static const raftlab::AnalysisOptions defaults;
  return o ? o->options : defaults;
}

std::mutex g_warning_mutex;

}  // namespace

extern "C" {

const char* raftlab_version(void) { return "0.1.0"; }

const char* raftlab_status_name(raftlab_status status) {
  switch (status) {
    case RAFTLAB_OK: return "ok";
    case RAFTLAB_ERR_PARSE: return "parse error";
    case RAFTLAB_ERR_VALIDATION: return "validation error";
    case RAFTLAB_ERR_IO: return "I/O error";
    case RAFTLAB_ERR_ENVIRONMENT: return "environment error";
    case RAFTLAB_ERR_PRECONDITION: return "precondition failure";
    case RAFTLAB_ERR_DOMAIN: return "domain error";
    case RAFTLAB_ERR_DUPLICATE: return "duplicate record";
    case RAFTLAB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RAFTLAB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* raftlab_last_error(void) { return g_last_error.c_str(); }

void raftlab_string_free(char* s) { std::free(s); }

void raftlab_set_warning_handler(raftlab_warning_fn fn, void* user) {
  std::lock_guard lock(g_warning_mutex);
  if (!fn) {
    raftlab::set_warning_sink(nullptr);
    return;
  }
  raftlab::set_warning_sink([fn, user](std::string_view message) {
    const std::string copy(message);
    fn(user, copy.c_str());
  });
}

raftlab_status raftlab_plan_load(const char* path, raftlab_plan** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new raftlab_plan{raftlab::load_plan(path)};
  });
}

raftlab_status raftlab_plan_parse(const char* json_text, raftlab_plan** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    *out = new raftlab_plan{raftlab::parse_plan_text(json_text)};
  });
}

raftlab_status raftlab_plan_builtin(const char* matrix, raftlab_plan** out) {
  return guarded([&] {
    require(matrix, "matrix");
    require(out, "out");
    auto configs = raftlab::builtin_matrix(matrix);
    if (!configs) throw InvalidArgument(std::string("unknown matrix '") + matrix + "'");
    auto* p = new raftlab_plan{};
    p->plan.project_name = matrix;
    p->plan.configs = std::move(*configs);
    *out = p;
  });
}

void raftlab_plan_free(raftlab_plan* plan) { delete plan; }

size_t raftlab_plan_config_count(const raftlab_plan* plan) {
  return plan ? plan->plan.configs.size() : 0;
}

const char* raftlab_plan_config_id(const raftlab_plan* plan, size_t index) {
  if (!plan || index >= plan->plan.configs.size()) return nullptr;
  return plan->plan.configs[index].id.c_str();
}

raftlab_status raftlab_plan_to_json(const raftlab_plan* plan, char** out) {
  return guarded([&] {
    require(plan, "plan");
    require(out, "out");
    *out = copy_string(raftlab::plan_to_json(plan->plan).dump(2));
  });
}

raftlab_status raftlab_options_new(raftlab_options** out) {
  return guarded([&] {
    require(out, "out");
    *out = new raftlab_options{};
  });
}

void raftlab_options_free(raftlab_options* options) { delete options; }

raftlab_status raftlab_options_set_alpha(raftlab_options* options, double alpha) {
  return guarded([&] {
    require(options, "options");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw raftlab::DomainError("alpha must lie strictly between 0 and 1");
    options->options.alpha = alpha;
  });
}

raftlab_status raftlab_options_set_fdr_family(raftlab_options* options, const char* family) {
  return guarded([&] {
    require(options, "options");
    require(family, "family");
    auto f = raftlab::parse_fdr_family(family);
    if (!f)
      throw InvalidArgument(std::string("unknown FDR family '") + family +
                            "' (expected per-test or per-project)");
    options->options.fdr_family = *f;
  });
}

raftlab_status raftlab_options_set_pricing(raftlab_options* options, const char* tier) {
  return guarded([&] {
    require(options, "options");
    require(tier, "tier");
    auto t = raftlab::parse_pricing_tier(tier);
    if (!t)
      throw InvalidArgument(std::string("unknown pricing tier '") + tier +
                            "' (expected spot or ondemand)");
    options->options.tier = *t;
  });
}

raftlab_status raftlab_options_set_plan(raftlab_options* options, const char* path) {
  return guarded([&] {
    require(options, "options");
    if (path)
      options->options.plan_path = path;
    else
      options->options.plan_path.reset();
  });
}

raftlab_status raftlab_options_set_baseline(raftlab_options* options, const char* config_id) {
  return guarded([&] {
    require(options, "options");
    if (config_id && !*config_id) throw InvalidArgument("baseline id must be non-empty");
    if (config_id)
      options->options.baseline_id = config_id;
    else
      options->options.baseline_id.reset();
  });
}

raftlab_status raftlab_run(const char* plan_path, const char* results_path, const char* output_dir,
                           raftlab_progress_fn progress, void* user,
                           raftlab_run_summary* summary) {
  return guarded([&] {
    require(plan_path, "plan_path");
    require(results_path, "results_path");
    raftlab::ExecOptions options;
    if (output_dir) options.output_dir = output_dir;
    raftlab::ExecutionObserver observer;
    if (progress) {
      observer = [progress, user](const raftlab::ExecutionEvent& e) {
        raftlab_run_event ev{};
        ev.kind = e.kind == raftlab::ExecutionEvent::Kind::Started    ? RAFTLAB_EVENT_STARTED
                  : e.kind == raftlab::ExecutionEvent::Kind::Finished ? RAFTLAB_EVENT_FINISHED
                                                                      : RAFTLAB_EVENT_SKIPPED;
        ev.config_id = e.config_id.c_str();
        ev.run_index = e.run_index;
        ev.valid = -1;
        if (e.record) {
          ev.valid = e.record->valid() ? 1 : 0;
          ev.duration_seconds = e.record->duration_seconds;
          ev.exit_code = e.record->exit_code;
        }
        progress(user, &ev);
      };
    }
    const auto s = raftlab::cmd_run(plan_path, results_path, options, observer);
    if (summary) *summary = {s.jobs_run, s.jobs_skipped, s.catastrophic_count};
  });
}

raftlab_status raftlab_simulate(const char* scenario_path, const char* results_path,
                                const uint64_t* seed, int64_t* records_written) {
  return guarded([&] {
    require(scenario_path, "scenario_path");
    require(results_path, "results_path");
    std::optional<std::uint64_t> s;
    if (seed) s = *seed;
    const auto n = raftlab::cmd_simulate(scenario_path, results_path, s);
    if (records_written) *records_written = n;
  });
}

raftlab_status raftlab_analyze(const char* results_path, const raftlab_options* options,
                               char** json_out) {
  return guarded([&] {
    require(results_path, "results_path");
    require(json_out, "json_out");
    *json_out = copy_string(raftlab::cmd_analyze(results_path, options_or_default(options)));
  });
}

raftlab_status raftlab_cost(const char* results_path, const raftlab_options* options,
                            char** text_out, char** json_out) {
  return guarded([&] {
    require(results_path, "results_path");
    const auto out = raftlab::cmd_cost(results_path, options_or_default(options));
    emit(text_out, out.text, json_out, out.json);
  });
}

raftlab_status raftlab_report(const char* results_path, const char* out_dir,
                              const raftlab_options* options, char** text_out, char** json_out) {
  return guarded([&] {
    require(results_path, "results_path");
    std::optional<std::filesystem::path> dir;
    if (out_dir) dir = out_dir;
    const auto out = raftlab::cmd_report(results_path, dir, options_or_default(options));
    emit(text_out, out.text, json_out, out.json);
  });
}

raftlab_status raftlab_fixture(const char* scenario_path, const char* out_path) {
  return guarded([&] {
    require(scenario_path, "scenario_path");
    require(out_path, "out_path");
    raftlab::cmd_fixture(scenario_path, out_path);
  });
}

raftlab_status raftlab_pearson_chi2(int64_t baseline_fail, int64_t baseline_pass,
                                    int64_t throttled_fail, int64_t throttled_pass,
                                    double* statistic, double* p_value) {
  return guarded([&] {
    const auto r =
        raftlab::pearson_chi2({baseline_fail, baseline_pass, throttled_fail, throttled_pass});
    if (statistic) *statistic = r.statistic;
    if (p_value) *p_value = r.p_value;
  });
}

raftlab_status raftlab_bh_adjust(const double* pvals, size_t n, double* adjusted) {
  return guarded([&] {
    if (n == 0) return;
    require(pvals, "pvals");
    require(adjusted, "adjusted");
    const auto out = raftlab::bh_adjust(std::span<const double>(pvals, n));
    std::memcpy(adjusted, out.data(), n * sizeof(double));
  });
}

raftlab_status raftlab_price_per_run(double avg_duration_seconds, double rate_usd_per_hour,
                                     double* usd) {
  return guarded([&] {
    require(usd, "usd");
    if (!(avg_duration_seconds >= 0.0) || !(rate_usd_per_hour >= 0.0))
      throw raftlab::DomainError("duration and rate must be non-negative");
    *usd = raftlab::price_per_run(avg_duration_seconds, rate_usd_per_hour);
  });
}

}  // extern "C"
