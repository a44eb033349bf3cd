/* C interface to the raftlab toolkit.
 *
 * Every fallible call returns a raftlab_status; on failure the message is
 * available from raftlab_last_error() on the same thread until the next
 * call. Strings returned through char** are owned by the caller and must
 * be released with raftlab_string_free().
 */
#ifndef RAFTLAB_RAFTLAB_H
#define RAFTLAB_RAFTLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(RAFTLAB_BUILDING_LIBRARY)
#define RAFTLAB_API __attribute__((visibility("default")))
#else
#define RAFTLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum raftlab_status {
  RAFTLAB_OK = 0,
  RAFTLAB_ERR_PARSE = 1,
  RAFTLAB_ERR_VALIDATION = 2,
  RAFTLAB_ERR_IO = 3,
  RAFTLAB_ERR_ENVIRONMENT = 4,
  RAFTLAB_ERR_PRECONDITION = 5,
  RAFTLAB_ERR_DOMAIN = 6,
  RAFTLAB_ERR_DUPLICATE = 7,
  RAFTLAB_ERR_INVALID_ARGUMENT = 8,
  RAFTLAB_ERR_INTERNAL = 9
} raftlab_status;

RAFTLAB_API const char* raftlab_version(void);
RAFTLAB_API const char* raftlab_status_name(raftlab_status status);
/* Never NULL; empty when the last call on this thread succeeded. */
RAFTLAB_API const char* raftlab_last_error(void);
RAFTLAB_API void raftlab_string_free(char* s);

/* Warnings (torn log lines, unenforced limits, unreadable reports).
 * A NULL handler restores the default, which prints to stderr. */
typedef void (*raftlab_warning_fn)(void* user, const char* message);
RAFTLAB_API void raftlab_set_warning_handler(raftlab_warning_fn fn, void* user);

/* Plans */
typedef struct raftlab_plan raftlab_plan;

RAFTLAB_API raftlab_status raftlab_plan_load(const char* path, raftlab_plan** out);
RAFTLAB_API raftlab_status raftlab_plan_parse(const char* json_text, raftlab_plan** out);
/* Built-in matrices: "phase1" or "phase2", wrapped in an otherwise empty plan. */
RAFTLAB_API raftlab_status raftlab_plan_builtin(const char* matrix, raftlab_plan** out);
RAFTLAB_API void raftlab_plan_free(raftlab_plan* plan);
RAFTLAB_API size_t raftlab_plan_config_count(const raftlab_plan* plan);
/* Borrowed pointer, valid until the plan is freed. */
RAFTLAB_API const char* raftlab_plan_config_id(const raftlab_plan* plan, size_t index);
RAFTLAB_API raftlab_status raftlab_plan_to_json(const raftlab_plan* plan, char** out);

/* Analysis options shared by analyze, cost and report. */
typedef struct raftlab_options raftlab_options;

RAFTLAB_API raftlab_status raftlab_options_new(raftlab_options** out);
RAFTLAB_API void raftlab_options_free(raftlab_options* options);
RAFTLAB_API raftlab_status raftlab_options_set_alpha(raftlab_options* options, double alpha);
/* "per-test" (default) or "per-project" */
RAFTLAB_API raftlab_status raftlab_options_set_fdr_family(raftlab_options* options,
                                                          const char* family);
/* "ondemand" (default) or "spot" */
RAFTLAB_API raftlab_status raftlab_options_set_pricing(raftlab_options* options, const char* tier);
/* Plan or scenario supplying baseline and pricing; NULL clears. */
RAFTLAB_API raftlab_status raftlab_options_set_plan(raftlab_options* options, const char* path);
/* Overrides the baseline config id; NULL clears. */
RAFTLAB_API raftlab_status raftlab_options_set_baseline(raftlab_options* options,
                                                        const char* config_id);

/* Execution */
typedef enum raftlab_event_kind {
  RAFTLAB_EVENT_STARTED = 0,
  RAFTLAB_EVENT_FINISHED = 1,
  RAFTLAB_EVENT_SKIPPED = 2
} raftlab_event_kind;

typedef struct raftlab_run_event {
  raftlab_event_kind kind;
  const char* config_id;
  int64_t run_index;
  /* FINISHED only: 1 Valid, 0 Catastrophic; otherwise -1 */
  int valid;
  double duration_seconds;
  int exit_code;
} raftlab_run_event;

typedef void (*raftlab_progress_fn)(void* user, const raftlab_run_event* event);

typedef struct raftlab_run_summary {
  int64_t jobs_run;
  int64_t jobs_skipped;
  int64_t catastrophic;
} raftlab_run_summary;

/* Executes the plan, appending to (and resuming from) the results log.
 * output_dir, progress and summary may be NULL. */
RAFTLAB_API raftlab_status raftlab_run(const char* plan_path, const char* results_path,
                                       const char* output_dir, raftlab_progress_fn progress,
                                       void* user, raftlab_run_summary* summary);

/* Writes a simulated results log. seed may be NULL to use the scenario's. */
RAFTLAB_API raftlab_status raftlab_simulate(const char* scenario_path, const char* results_path,
                                            const uint64_t* seed, int64_t* records_written);

RAFTLAB_API raftlab_status raftlab_analyze(const char* results_path,
                                           const raftlab_options* options, char** json_out);
RAFTLAB_API raftlab_status raftlab_cost(const char* results_path, const raftlab_options* options,
                                        char** text_out, char** json_out);
/* out_dir may be NULL; otherwise report.txt and report.json are written there.
 * text_out and json_out may be NULL. */
RAFTLAB_API raftlab_status raftlab_report(const char* results_path, const char* out_dir,
                                          const raftlab_options* options, char** text_out,
                                          char** json_out);
RAFTLAB_API raftlab_status raftlab_fixture(const char* scenario_path, const char* out_path);

/* Statistics and pricing primitives. Output pointers of raftlab_pearson_chi2
 * may be NULL. */
RAFTLAB_API raftlab_status raftlab_pearson_chi2(int64_t baseline_fail, int64_t baseline_pass,
                                                int64_t throttled_fail, int64_t throttled_pass,
                                                double* statistic, double* p_value);
/* adjusted must hold n doubles; it may alias pvals. */
RAFTLAB_API raftlab_status raftlab_bh_adjust(const double* pvals, size_t n, double* adjusted);
RAFTLAB_API raftlab_status raftlab_price_per_run(double avg_duration_seconds,
                                                 double rate_usd_per_hour, double* usd);

#ifdef __cplusplus
}
#endif

#endif
