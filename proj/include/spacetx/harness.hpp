#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "spacetx/benchmark.hpp"
#include "spacetx/gp.hpp"
#include "spacetx/optimizer.hpp"
#include "spacetx/transfer.hpp"

namespace spacetx {

// (incumbent - y_min) / (y_max - y_min) per trial. Throws when
// y_min >= y_max or the trajectory increases anywhere.
std::vector<double> compute_nce(std::span<const double> trajectory, double y_min,
                                double y_max);

struct ProtocolConfig {
  std::size_t n_source = 100;
  std::size_t n_trials = 50;
  std::size_t n_init = 3;
  std::size_t reps = 20;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 0;  // 0 = hardware concurrency
  GpOptions gp;
  DesignConfig design;
  bool record_members = false;
};

void validate_protocol(const ProtocolConfig& protocol);

struct CellKey {
  std::string task;
  std::string method;
  std::size_t rep = 0;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

std::string describe(const CellKey& key);

struct CellResult {
  std::uint64_t seed = 0;
  std::vector<double> incumbent;
  std::vector<double> nce;
  std::vector<std::size_t> space_size;
  // Full run record; absent when the cell was read back from CSV.
  std::optional<ExperimentResult> detail;
};

struct ResultSet {
  ProtocolConfig protocol;
  std::vector<std::string> tasks;
  std::vector<std::string> methods;
  std::map<CellKey, CellResult> cells;

  // Cells implied by tasks x methods x reps that are not present.
  std::vector<CellKey> missing() const;
};

std::uint64_t cell_seed(std::uint64_t base_seed, std::string_view task,
                        std::string_view method, std::size_t rep);

// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown
// after every worker has stopped.
void parallel_for(std::size_t n, std::size_t jobs,
                  const std::function<void(std::size_t)>& fn);

std::size_t resolve_jobs(std::size_t requested);

// Source tasks for one (target, rep): every other task truncated to
// n_source seeded-uniform rows; surrogates fit when fit_surrogates is set.
std::vector<SourceTask> build_sources(const Benchmark& benchmark, std::size_t target,
                                      std::size_t rep, const ProtocolConfig& protocol,
                                      bool fit_surrogates);

// The n_init configurations shared by all methods for (target, rep).
std::vector<Configuration> shared_initial_design(const Benchmark& benchmark,
                                                 std::size_t target, std::size_t rep,
                                                 const ProtocolConfig& protocol);

using ProgressFn = std::function<void(const CellKey&)>;

ResultSet run_leave_one_out(const Benchmark& benchmark, const std::vector<Method>& methods,
                            const ProtocolConfig& protocol,
                            const ProgressFn& progress = {});

struct Curve {
  std::vector<double> mean;
  std::vector<double> std;
};

struct Aggregate {
  // Per method: per trial, mean over tasks of the rep-mean NCE; std is the
  // population std across reps of the task-averaged NCE.
  std::map<std::string, Curve> methods;
  // Per (method, task): mean and population std across reps.
  std::map<std::pair<std::string, std::string>, Curve> per_task;
};

// Throws Error(kIncomplete) listing missing cells.
Aggregate aggregate_results(const ResultSet& results);

}  // namespace spacetx
