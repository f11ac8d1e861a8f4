#include "spacetx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "spacetx/error.hpp"

namespace spacetx {

std::vector<double> compute_nce(std::span<const double> trajectory, double y_min,
                                double y_max) {
  if (!(y_min < y_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw Error(ErrorKind::kInvalidArgument, "compute_nce: need finite y_min < y_max");
  }
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    if (t > 0 && trajectory[t] > trajectory[t - 1]) {
      throw Error(ErrorKind::kInvalidArgument,
                  "compute_nce: trajectory increases at trial " + std::to_string(t + 1));
    }
    const double v = (trajectory[t] - y_min) / (y_max - y_min);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "compute_nce: incumbent outside [y_min, y_max] at trial " +
                      std::to_string(t + 1));
    }
    out.push_back(v);
  }
  return out;
}

void validate_protocol(const ProtocolConfig& p) {
  if (p.n_trials < 1) throw Error(ErrorKind::kInvalidArgument, "trial count must be >= 1");
  if (p.n_init < 1 || p.n_init > p.n_trials) {
    throw Error(ErrorKind::kInvalidArgument, "need 1 <= n_init <= trial count");
  }
  if (p.n_source < 2) throw Error(ErrorKind::kInvalidArgument, "n_source must be >= 2");
  if (p.reps < 1) throw Error(ErrorKind::kInvalidArgument, "rep count must be >= 1");
  validate_options(p.gp);
  validate_design_config(p.design);
}

std::string describe(const CellKey& key) {
  return key.task + "/" + key.method + "/rep" + std::to_string(key.rep);
}

std::vector<CellKey> ResultSet::missing() const {
  std::vector<CellKey> out;
  for (const auto& t : tasks) {
    for (const auto& m : methods) {
      for (std::size_t r = 0; r < protocol.reps; ++r) {
        CellKey key{t, m, r};
        if (!cells.contains(key)) out.push_back(std::move(key));
      }
    }
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::string_view task,
                        std::string_view method, std::size_t rep) {
  return stable_hash(base_seed, task, method, static_cast<std::uint64_t>(rep));
}

std::size_t resolve_jobs(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPACETX_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn) {
  jobs = std::min(std::max<std::size_t>(jobs, 1), n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<SourceTask> build_sources(const Benchmark& benchmark, std::size_t target,
                                      std::size_t rep, const ProtocolConfig& protocol,
                                      bool fit_surrogates) {
  const auto& tasks = benchmark.tasks();
  const std::string& target_id = tasks.at(target).id;
  Rng rng(stable_hash(protocol.base_seed, target_id, std::string_view("sources"),
                      static_cast<std::uint64_t>(rep)));
  std::vector<SourceTask> sources;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (i == target) continue;
    const auto& t = tasks[i];
    TaskHistory history;
    for (std::size_t row : initial_design(t.size(), protocol.n_source, rng)) {
      history.add(t.configs[row], t.ys[row]);
    }
    GpOptions opts = protocol.gp;
    opts.seed = stable_hash(protocol.base_seed, target_id, std::string_view("surrogate"),
                            static_cast<std::uint64_t>(rep), t.id);
    sources.push_back(SourceTask::build(t.id, benchmark.space(), std::move(history),
                                        opts, fit_surrogates));
  }
  return sources;
}

std::vector<Configuration> shared_initial_design(const Benchmark& benchmark,
                                                 std::size_t target, std::size_t rep,
                                                 const ProtocolConfig& protocol) {
  const auto& t = benchmark.tasks().at(target);
  Rng rng(stable_hash(protocol.base_seed, t.id, std::string_view("init"),
                      static_cast<std::uint64_t>(rep)));
  return initial_design(t.configs, protocol.n_init, rng);
}

ResultSet run_leave_one_out(const Benchmark& benchmark, const std::vector<Method>& methods,
                            const ProtocolConfig& protocol, const ProgressFn& progress) {
  validate_protocol(protocol);
  if (methods.empty()) throw Error(ErrorKind::kInvalidArgument, "no methods given");
  const auto& tasks = benchmark.tasks();
  if (tasks.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "leave-one-out needs at least two tasks");
  }
  for (const auto& t : tasks) {
    if (t.size() < std::max(protocol.n_source, protocol.n_trials)) {
      throw Error(ErrorKind::kValidation,
                  "task \"" + t.id + "\" has " + std::to_string(t.size()) +
                      " rows; need at least " +
                      std::to_string(std::max(protocol.n_source, protocol.n_trials)));
    }
  }
  const bool need_surrogates =
      std::any_of(methods.begin(), methods.end(),
                  [](const Method& m) { return is_transfer_designer(m.designer.kind); });
  const std::size_t jobs = resolve_jobs(protocol.jobs);

  // Phase 1: sources, pools and initial designs per (target, rep).
  struct Group {
    SourceSet sources;
    std::vector<Configuration> initial;
  };
  const std::size_t n_groups = tasks.size() * protocol.reps;
  std::vector<Group> groups(n_groups);
  std::vector<CandidatePool> pools(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    pools[t] = CandidatePool::build(benchmark.space(), tasks[t].configs);
  });
  parallel_for(n_groups, jobs, [&](std::size_t g) {
    const std::size_t t = g / protocol.reps;
    const std::size_t rep = g % protocol.reps;
    groups[g].sources = std::make_shared<const std::vector<SourceTask>>(
        build_sources(benchmark, t, rep, protocol, need_surrogates));
    groups[g].initial = shared_initial_design(benchmark, t, rep, protocol);
  });

  // Phase 2: every (target, rep, method) cell.
  ResultSet out;
  out.protocol = protocol;
  for (const auto& t : tasks) out.tasks.push_back(t.id);
  for (const auto& m : methods) out.methods.push_back(m.token);
  std::mutex out_mutex;
  parallel_for(n_groups * methods.size(), jobs, [&](std::size_t c) {
    const std::size_t g = c / methods.size();
    const Method& method = methods[c % methods.size()];
    const std::size_t t = g / protocol.reps;
    const std::size_t rep = g % protocol.reps;
    const auto& task = tasks[t];
    CellKey key{task.id, method.token, rep};

    RunSpec spec;
    spec.space = &benchmark.space();
    spec.evaluate = [&benchmark, &task](const Configuration& config) {
      return benchmark.evaluate(task.id, config);
    };
    spec.pool = &pools[t];
    spec.initial = groups[g].initial;
    spec.n_init = protocol.n_init;
    spec.trials = protocol.n_trials;
    spec.seed = cell_seed(protocol.base_seed, task.id, method.token, rep);
    spec.gp = protocol.gp;
    spec.record_members = protocol.record_members;

    CellResult cell;
    cell.seed = spec.seed;
    ExperimentResult result = run_method(spec, method, groups[g].sources);
    cell.incumbent = result.incumbent_trajectory;
    cell.nce = compute_nce(cell.incumbent, task.y_min, task.y_max);
    cell.space_size = result.designed_space_sizes;
    cell.detail = std::move(result);
    {
      std::lock_guard lock(out_mutex);
      out.cells.emplace(key, std::move(cell));
    }
    if (progress) progress(key);
  });
  return out;
}

namespace {

Curve mean_std(const std::vector<std::vector<double>>& rows, std::size_t length) {
  Curve c;
  c.mean.assign(length, 0.0);
  c.std.assign(length, 0.0);
  const double n = static_cast<double>(rows.size());
  for (std::size_t t = 0; t < length; ++t) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[t] - mean) * (r[t] - mean);
    c.mean[t] = mean;
    c.std[t] = std::sqrt(ss / n);
  }
  return c;
}

}  // namespace

Aggregate aggregate_results(const ResultSet& results) {
  const auto missing = results.missing();
  if (!missing.empty()) {
    std::string msg = "incomplete results; missing cells:";
    for (const auto& k : missing) msg += " " + describe(k);
    throw Error(ErrorKind::kIncomplete, msg);
  }
  if (results.tasks.empty() || results.methods.empty() || results.protocol.reps == 0) {
    throw Error(ErrorKind::kIncomplete, "result set is empty");
  }
  std::size_t length = 0;
  for (const auto& [key, cell] : results.cells) {
    if (length == 0) length = cell.nce.size();
    if (cell.nce.size() != length) {
      throw Error(ErrorKind::kIncomplete,
                  "cell " + describe(key) + " has " + std::to_string(cell.nce.size()) +
                      " trials, expected " + std::to_string(length));
    }
  }

  Aggregate agg;
  const std::size_t reps = results.protocol.reps;
  const double n_tasks = static_cast<double>(results.tasks.size());
  for (const auto& m : results.methods) {
    std::vector<std::vector<double>> task_avg(reps, std::vector<double>(length, 0.0));
    for (const auto& t : results.tasks) {
      std::vector<std::vector<double>> rows;
      rows.reserve(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& nce = results.cells.at(CellKey{t, m, r}).nce;
        rows.push_back(nce);
        for (std::size_t i = 0; i < length; ++i) task_avg[r][i] += nce[i] / n_tasks;
      }
      agg.per_task[{m, t}] = mean_std(rows, length);
    }
    Curve curve = mean_std(task_avg, length);
    // Reps-then-tasks mean, taken directly rather than from task_avg.
    for (std::size_t i = 0; i < length; ++i) {
      double sum = 0.0;
      for (const auto& t : results.tasks) sum += agg.per_task[{m, t}].mean[i];
      curve.mean[i] = sum / n_tasks;
    }
    agg.methods[m] = std::move(curve);
  }
  return agg;
}

}  // namespace spacetx
