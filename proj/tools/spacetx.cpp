// spacetx command-line front end. Talks to the library only through the C API.
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "spacetx/spacetx.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int report_failure(const char* context, spacetx_status status) {
  std::fprintf(stderr, "spacetx %s: %s: %s\n", context, spacetx_status_name(status),
               spacetx_last_error());
  switch (status) {
    case SPACETX_ERR_BAD_METHOD:
    case SPACETX_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

struct Progress {
  bool enabled = false;
  std::size_t total = 0;
  std::atomic<std::size_t> done{0};
};

void on_cell(const char* task, const char* method, size_t rep, void* user) {
  auto* p = static_cast<Progress*>(user);
  const std::size_t n = ++p->done;
  if (p->enabled) std::fprintf(stderr, "[%zu] %s %s rep %zu\n", n, task, method, rep);
}

struct RunArgs {
  std::string benchmark;
  std::string methods;
  std::string out = "results";
  std::string manifest;
  spacetx_run_options opts{};
  bool progress = false;
};

int cmd_run(RunArgs& a) {
  Progress progress;
  progress.enabled = a.progress;
  spacetx_status st;
  if (!a.manifest.empty()) {
    st = spacetx_run_manifest(a.manifest.c_str(), a.out.c_str(), a.opts.jobs, on_cell,
                              &progress);
  } else {
    if (a.benchmark.empty() || a.methods.empty()) {
      std::fprintf(stderr, "spacetx run: --benchmark and --methods are required\n");
      return kExitUsage;
    }
    st = spacetx_validate_methods(a.methods.c_str());
    if (st != SPACETX_OK) return report_failure("run", st);
    a.opts.benchmark_path = a.benchmark.c_str();
    a.opts.methods = a.methods.c_str();
    a.opts.out_dir = a.out.c_str();
    st = spacetx_run(&a.opts, on_cell, &progress);
  }
  if (st != SPACETX_OK) return report_failure("run", st);
  std::printf("%zu cells written to %s\n", progress.done.load(), a.out.c_str());
  return kExitOk;
}

struct GenArgs {
  std::string family = "shifted-quadratic";
  spacetx_synthetic_spec spec{};
  bool adversarial = false;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_genbench(GenArgs& a) {
  a.spec.family = a.family.c_str();
  a.spec.adversarial = a.adversarial ? 1 : 0;
  spacetx_benchmark* b = nullptr;
  spacetx_status st = spacetx_benchmark_generate(&a.spec, a.seed, &b);
  if (st != SPACETX_OK) return report_failure("genbench", st);
  st = spacetx_benchmark_save(b, a.out.c_str());
  if (st != SPACETX_OK) {
    spacetx_benchmark_free(b);
    return report_failure("genbench", st);
  }
  char* summary = nullptr;
  st = spacetx_benchmark_similarity_summary(b, &summary);
  spacetx_benchmark_free(b);
  if (st != SPACETX_OK) return report_failure("genbench", st);
  std::printf("wrote %s\n%s", a.out.c_str(), summary);
  spacetx_string_free(summary);
  return kExitOk;
}

struct ReportArgs {
  std::string results;
  std::string format = "table";
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  char* text = nullptr;
  const spacetx_status st = spacetx_report(a.results.c_str(), a.format.c_str(),
                                           a.out.empty() ? nullptr : a.out.c_str(), &text);
  if (st != SPACETX_OK) {
    // Incomplete or missing results are data problems, not usage errors.
    if (st == SPACETX_ERR_INVALID_ARGUMENT) return report_failure("report", st);
    std::fprintf(stderr, "spacetx report: %s: %s\n", spacetx_status_name(st),
                 spacetx_last_error());
    return kExitFailure;
  }
  std::fputs(text, stdout);
  spacetx_string_free(text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search-space design for transfer hyperparameter tuning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(spacetx_version()));

  RunArgs run;
  spacetx_run_options_defaults(&run.opts);
  auto* run_cmd = app.add_subcommand("run", "Leave-one-out experiment over a benchmark");
  run_cmd->add_option("--benchmark", run.benchmark, "Benchmark JSON file");
  run_cmd->add_option("--methods", run.methods, "Comma list, e.g. rs,gp,box-gp,ours-gp");
  run_cmd->add_option("--trial-num", run.opts.trial_num, "Evaluations per run")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--rep", run.opts.reps, "Repetitions per task")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--seed", run.opts.seed, "Base seed")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--n-init", run.opts.n_init, "Random initial evaluations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--n-source", run.opts.n_source, "Observations kept per source")
      ->capture_default_str();
  run_cmd->add_option("--alpha-min", run.opts.alpha_min)->capture_default_str();
  run_cmd->add_option("--alpha-max", run.opts.alpha_max)->capture_default_str();
  run_cmd->add_option("--k", run.opts.k, "Sampled source tasks")->capture_default_str();
  run_cmd->add_option("--n-candidates", run.opts.n_candidates)->capture_default_str();
  run_cmd->add_option("--min-space-size", run.opts.min_space_size)->capture_default_str();
  run_cmd->add_option("--jobs", run.opts.jobs, "Worker threads (0: SPACETX_JOBS or all cores)")
      ->capture_default_str();
  run_cmd->add_option("--manifest", run.manifest, "Replay a previous run's manifest.json")
      ->excludes("--benchmark")
      ->excludes("--methods");
  run_cmd->add_flag("--progress", run.progress, "Print one line per finished cell");

  GenArgs gen;
  spacetx_synthetic_spec_defaults(&gen.spec);
  auto* gen_cmd = app.add_subcommand("genbench", "Generate a synthetic task family");
  gen_cmd->add_option("--family", gen.family,
                      "shifted-quadratic | shifted-branin | shifted-categorical")
      ->capture_default_str();
  gen_cmd->add_option("--n-tasks", gen.spec.n_tasks)->capture_default_str();
  gen_cmd->add_option("--shift-scale", gen.spec.shift_scale)->capture_default_str();
  gen_cmd->add_option("--n-grid", gen.spec.n_grid)->capture_default_str();
  gen_cmd->add_option("--noise", gen.spec.noise_std)->capture_default_str();
  gen_cmd->add_flag("--adversarial", gen.adversarial, "Negate every other task");
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output benchmark file")->required();

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Summarize a results directory");
  rep_cmd->add_option("--results", rep.results, "Directory written by run")->required();
  rep_cmd->add_option("--format", rep.format, "table | plotdata")
      ->check(CLI::IsMember({"table", "plotdata"}))
      ->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "Directory for plotdata series files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run_cmd) return cmd_run(run);
  if (*gen_cmd) return cmd_genbench(gen);
  if (*rep_cmd) return cmd_report(rep);
  return kExitUsage;
}
