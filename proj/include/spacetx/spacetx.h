/* C interface to the spacetx library. Every call that can fail returns a
 * spacetx_status; the message of the most recent failure on the calling
 * thread is available from spacetx_last_error(). */
#ifndef SPACETX_SPACETX_H
#define SPACETX_SPACETX_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPACETX_BUILDING_LIBRARY)
#define SPACETX_API __attribute__((visibility("default")))
#else
#define SPACETX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spacetx_status {
  SPACETX_OK = 0,
  SPACETX_ERR_INVALID_ARGUMENT = 1,
  SPACETX_ERR_PARSE = 2,
  SPACETX_ERR_VALIDATION = 3,
  SPACETX_ERR_NOT_FOUND = 4,
  SPACETX_ERR_NUMERICAL = 5,
  SPACETX_ERR_IO = 6,
  SPACETX_ERR_INCOMPLETE = 7,
  SPACETX_ERR_BAD_METHOD = 8,
  SPACETX_ERR_INTERNAL = 9
} spacetx_status;

SPACETX_API const char* spacetx_version(void);
/* Never NULL; empty when the last call on this thread succeeded. */
SPACETX_API const char* spacetx_last_error(void);
SPACETX_API const char* spacetx_status_name(spacetx_status status);

/* Strings returned through char** out-parameters are owned by the caller. */
SPACETX_API void spacetx_string_free(char* s);

typedef struct spacetx_benchmark spacetx_benchmark;

SPACETX_API spacetx_status spacetx_benchmark_load(const char* path,
                                                  spacetx_benchmark** out);
SPACETX_API spacetx_status spacetx_benchmark_parse(const char* json, size_t length,
                                                   spacetx_benchmark** out);

typedef struct spacetx_synthetic_spec {
  const char* family; /* shifted-quadratic | shifted-branin | shifted-categorical */
  size_t n_tasks;
  double shift_scale;
  size_t n_grid;
  double noise_std;
  int adversarial;
} spacetx_synthetic_spec;

SPACETX_API void spacetx_synthetic_spec_defaults(spacetx_synthetic_spec* spec);
SPACETX_API spacetx_status spacetx_benchmark_generate(const spacetx_synthetic_spec* spec,
                                                      uint64_t seed,
                                                      spacetx_benchmark** out);
SPACETX_API spacetx_status spacetx_benchmark_save(const spacetx_benchmark* b,
                                                  const char* path);
SPACETX_API void spacetx_benchmark_free(spacetx_benchmark* b);

SPACETX_API size_t spacetx_benchmark_task_count(const spacetx_benchmark* b);
/* NULL when out of range. Valid while the handle lives. */
SPACETX_API const char* spacetx_benchmark_task_id(const spacetx_benchmark* b, size_t index);
SPACETX_API size_t spacetx_benchmark_task_rows(const spacetx_benchmark* b, size_t index);
/* Exact lookup of a configuration given as a JSON object keyed by parameter
 * name. */
SPACETX_API spacetx_status spacetx_benchmark_evaluate(const spacetx_benchmark* b,
                                                      const char* task_id,
                                                      const char* config_json,
                                                      double* y);
/* Row-major n x n matrix of true-surface similarities; only for generated
 * benchmarks (SPACETX_ERR_NOT_FOUND otherwise). `out` holds capacity
 * doubles. */
SPACETX_API spacetx_status spacetx_benchmark_true_similarity(const spacetx_benchmark* b,
                                                             double* out,
                                                             size_t capacity);
SPACETX_API spacetx_status spacetx_benchmark_similarity_summary(
    const spacetx_benchmark* b, char** out);

typedef struct spacetx_run_options {
  const char* benchmark_path;
  const char* methods; /* comma list, e.g. "gp,ours-gp" */
  const char* out_dir;
  size_t trial_num;
  size_t n_init;
  size_t n_source;
  size_t reps;
  uint64_t seed;
  double alpha_min;
  double alpha_max;
  size_t k;
  size_t n_candidates;
  size_t min_space_size;
  size_t jobs; /* 0: SPACETX_JOBS, then hardware concurrency */
} spacetx_run_options;

SPACETX_API void spacetx_run_options_defaults(spacetx_run_options* options);

/* SPACETX_ERR_BAD_METHOD with the offending token in the message. */
SPACETX_API spacetx_status spacetx_validate_methods(const char* methods);

typedef void (*spacetx_progress_fn)(const char* task, const char* method, size_t rep,
                                    void* user);

SPACETX_API spacetx_status spacetx_run(const spacetx_run_options* options,
                                       spacetx_progress_fn progress, void* user);
/* Replays the run recorded in manifest_path into out_dir. */
SPACETX_API spacetx_status spacetx_run_manifest(const char* manifest_path,
                                                const char* out_dir, size_t jobs,
                                                spacetx_progress_fn progress, void* user);

/* format: "table" or "plotdata". plot_dir may be NULL. */
SPACETX_API spacetx_status spacetx_report(const char* results_dir, const char* format,
                                          const char* plot_dir, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SPACETX_SPACETX_H */
