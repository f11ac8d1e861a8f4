#include "spacetx/spacetx.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include <json.hpp>

#include "spacetx/benchmark.hpp"
#include "spacetx/commands.hpp"
#include "spacetx/error.hpp"
#include "spacetx/optimizer.hpp"

struct spacetx_benchmark {
  spacetx::Benchmark benchmark;
  std::optional<Eigen::MatrixXd> true_similarity;
};

namespace {

thread_local std::string g_last_error;

spacetx_status to_status(spacetx::ErrorKind kind) {
  using spacetx::ErrorKind;
  switch (kind) {
    case ErrorKind::kInvalidArgument: return SPACETX_ERR_INVALID_ARGUMENT;
    case ErrorKind::kParse: return SPACETX_ERR_PARSE;
    case ErrorKind::kValidation: return SPACETX_ERR_VALIDATION;
    case ErrorKind::kNotFound: return SPACETX_ERR_NOT_FOUND;
    case ErrorKind::kNumerical: return SPACETX_ERR_NUMERICAL;
    case ErrorKind::kIo: return SPACETX_ERR_IO;
    case ErrorKind::kIncomplete: return SPACETX_ERR_INCOMPLETE;
    case ErrorKind::kBadMethod: return SPACETX_ERR_BAD_METHOD;
  }
  return SPACETX_ERR_INTERNAL;
}

template <class F>
spacetx_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return SPACETX_OK;
  } catch (const spacetx::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return SPACETX_ERR_INTERNAL;
}

spacetx_status null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return SPACETX_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

spacetx::ProgressFn wrap_progress(spacetx_progress_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const spacetx::CellKey& key) {
    fn(key.task.c_str(), key.method.c_str(), key.rep, user);
  };
}

}  // namespace

extern "C" {

const char* spacetx_version(void) { return "0.1.0"; }

const char* spacetx_last_error(void) { return g_last_error.c_str(); }

const char* spacetx_status_name(spacetx_status status) {
  switch (status) {
    case SPACETX_OK: return "ok";
    case SPACETX_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SPACETX_ERR_PARSE: return "parse error";
    case SPACETX_ERR_VALIDATION: return "validation error";
    case SPACETX_ERR_NOT_FOUND: return "not found";
    case SPACETX_ERR_NUMERICAL: return "numerical error";
    case SPACETX_ERR_IO: return "i/o error";
    case SPACETX_ERR_INCOMPLETE: return "incomplete results";
    case SPACETX_ERR_BAD_METHOD: return "bad method";
    case SPACETX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void spacetx_string_free(char* s) { std::free(s); }

spacetx_status spacetx_benchmark_load(const char* path, spacetx_benchmark** out) {
  if (path == nullptr) return null_arg("path");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new spacetx_benchmark{spacetx::load_tabular_benchmark(path), std::nullopt};
  });
}

spacetx_status spacetx_benchmark_parse(const char* json, size_t length,
                                       spacetx_benchmark** out) {
  if (json == nullptr) return null_arg("json");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    *out = new spacetx_benchmark{spacetx::parse_benchmark(std::string_view(json, length)),
                                 std::nullopt};
  });
}

void spacetx_synthetic_spec_defaults(spacetx_synthetic_spec* spec) {
  if (spec == nullptr) return;
  const spacetx::SyntheticSpec d;
  spec->family = "shifted-quadratic";
  spec->n_tasks = d.n_tasks;
  spec->shift_scale = d.shift_scale;
  spec->n_grid = d.n_grid;
  spec->noise_std = d.noise_std;
  spec->adversarial = d.adversarial ? 1 : 0;
}

spacetx_status spacetx_benchmark_generate(const spacetx_synthetic_spec* spec, uint64_t seed,
                                          spacetx_benchmark** out) {
  if (spec == nullptr) return null_arg("spec");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    spacetx::SyntheticSpec s;
    s.family = spacetx::parse_family(spec->family ? spec->family : "");
    s.n_tasks = spec->n_tasks;
    s.shift_scale = spec->shift_scale;
    s.n_grid = spec->n_grid;
    s.noise_std = spec->noise_std;
    s.adversarial = spec->adversarial != 0;
    auto family = spacetx::generate_synthetic_family(s, seed);
    Eigen::MatrixXd sim = spacetx::true_similarity_matrix(family);
    *out = new spacetx_benchmark{std::move(family.benchmark), std::move(sim)};
  });
}

spacetx_status spacetx_benchmark_save(const spacetx_benchmark* b, const char* path) {
  if (b == nullptr) return null_arg("benchmark");
  if (path == nullptr) return null_arg("path");
  return guarded([&] { spacetx::save_benchmark(b->benchmark, path); });
}

void spacetx_benchmark_free(spacetx_benchmark* b) { delete b; }

size_t spacetx_benchmark_task_count(const spacetx_benchmark* b) {
  return b == nullptr ? 0 : b->benchmark.tasks().size();
}

const char* spacetx_benchmark_task_id(const spacetx_benchmark* b, size_t index) {
  if (b == nullptr || index >= b->benchmark.tasks().size()) return nullptr;
  return b->benchmark.tasks()[index].id.c_str();
}

size_t spacetx_benchmark_task_rows(const spacetx_benchmark* b, size_t index) {
  if (b == nullptr || index >= b->benchmark.tasks().size()) return 0;
  return b->benchmark.tasks()[index].size();
}

spacetx_status spacetx_benchmark_evaluate(const spacetx_benchmark* b, const char* task_id,
                                          const char* config_json, double* y) {
  if (b == nullptr) return null_arg("benchmark");
  if (task_id == nullptr) return null_arg("task_id");
  if (config_json == nullptr) return null_arg("config_json");
  if (y == nullptr) return null_arg("y");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw spacetx::Error(spacetx::ErrorKind::kParse, e.what());
    }
    const auto config = spacetx::config_from_json(b->benchmark.space(), j);
    *y = b->benchmark.evaluate(task_id, config);
  });
}

spacetx_status spacetx_benchmark_true_similarity(const spacetx_benchmark* b, double* out,
                                                 size_t capacity) {
  if (b == nullptr) return null_arg("benchmark");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    if (!b->true_similarity) {
      throw spacetx::Error(spacetx::ErrorKind::kNotFound,
                           "true similarity is only known for generated benchmarks");
    }
    const auto& m = *b->true_similarity;
    if (capacity < static_cast<size_t>(m.size())) {
      throw spacetx::Error(spacetx::ErrorKind::kInvalidArgument,
                           "capacity below " + std::to_string(m.size()));
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) *out++ = m(i, j);
    }
  });
}

spacetx_status spacetx_benchmark_similarity_summary(const spacetx_benchmark* b, char** out) {
  if (b == nullptr) return null_arg("benchmark");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    if (!b->true_similarity) {
      throw spacetx::Error(spacetx::ErrorKind::kNotFound,
                           "true similarity is only known for generated benchmarks");
    }
    std::vector<std::string> ids;
    for (const auto& t : b->benchmark.tasks()) ids.push_back(t.id);
    *out = dup_string(spacetx::similarity_summary(*b->true_similarity, ids));
  });
}

void spacetx_run_options_defaults(spacetx_run_options* o) {
  if (o == nullptr) return;
  const spacetx::ProtocolConfig p;
  o->benchmark_path = nullptr;
  o->methods = nullptr;
  o->out_dir = nullptr;
  o->trial_num = p.n_trials;
  o->n_init = p.n_init;
  o->n_source = p.n_source;
  o->reps = p.reps;
  o->seed = p.base_seed;
  o->alpha_min = p.design.alpha_min;
  o->alpha_max = p.design.alpha_max;
  o->k = p.design.k;
  o->n_candidates = p.design.n_candidates;
  o->min_space_size = p.design.min_space_size;
  o->jobs = 0;
}

spacetx_status spacetx_validate_methods(const char* methods) {
  if (methods == nullptr) return null_arg("methods");
  return guarded([&] { spacetx::parse_methods(methods); });
}

spacetx_status spacetx_run(const spacetx_run_options* o, spacetx_progress_fn progress,
                           void* user) {
  if (o == nullptr) return null_arg("options");
  if (o->benchmark_path == nullptr) return null_arg("benchmark_path");
  if (o->methods == nullptr) return null_arg("methods");
  if (o->out_dir == nullptr) return null_arg("out_dir");
  return guarded([&] {
    spacetx::RunRequest req;
    req.benchmark = o->benchmark_path;
    req.methods = o->methods;
    req.out_dir = o->out_dir;
    auto& p = req.protocol;
    p.n_trials = o->trial_num;
    p.n_init = o->n_init;
    p.n_source = o->n_source;
    p.reps = o->reps;
    p.base_seed = o->seed;
    p.jobs = o->jobs;
    p.design.alpha_min = o->alpha_min;
    p.design.alpha_max = o->alpha_max;
    p.design.k = o->k;
    p.design.n_candidates = o->n_candidates;
    p.design.min_space_size = o->min_space_size;
    spacetx::execute_run(req, wrap_progress(progress, user));
  });
}

spacetx_status spacetx_run_manifest(const char* manifest_path, const char* out_dir,
                                    size_t jobs, spacetx_progress_fn progress, void* user) {
  if (manifest_path == nullptr) return null_arg("manifest_path");
  if (out_dir == nullptr) return null_arg("out_dir");
  return guarded([&] {
    spacetx::RunRequest req = spacetx::request_from_manifest(manifest_path);
    req.out_dir = out_dir;
    req.protocol.jobs = jobs;
    spacetx::execute_run(req, wrap_progress(progress, user));
  });
}

spacetx_status spacetx_report(const char* results_dir, const char* format,
                              const char* plot_dir, char** out) {
  if (results_dir == nullptr) return null_arg("results_dir");
  if (format == nullptr) return null_arg("format");
  if (out == nullptr) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    const auto fmt = spacetx::parse_report_format(format);
    *out = dup_string(spacetx::render_report(results_dir, fmt,
                                             plot_dir ? plot_dir : std::filesystem::path()));
  });
}

}  // extern "C"
