#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "spacetx/config_space.hpp"

namespace spacetx {

// One task of a tabular benchmark: every evaluated configuration and its
// objective value (lower is better).
struct BenchmarkTask {
  std::string id;
  std::vector<Configuration> configs;
  std::vector<double> ys;
  double y_min = 0.0;
  double y_max = 0.0;
  std::unordered_map<std::string, std::size_t> index;  // canonical key -> row

  std::size_t size() const { return ys.size(); }
};

class Benchmark {
 public:
  Benchmark() = default;
  // Validates rows against the space, computes y_min / y_max and builds the
  // lookup index. Throws Error(kValidation) naming the task.
  Benchmark(SearchSpace space, std::vector<BenchmarkTask> tasks);

  const SearchSpace& space() const { return space_; }
  const std::vector<BenchmarkTask>& tasks() const { return tasks_; }
  const BenchmarkTask& task(std::string_view id) const;
  std::size_t task_index(std::string_view id) const;

  // Exact lookup of a stored row; anything else is an error.
  double evaluate(std::string_view task_id, const Configuration& config) const;

 private:
  SearchSpace space_;
  std::vector<BenchmarkTask> tasks_;
};

Benchmark parse_benchmark(std::string_view json_text);
Benchmark load_tabular_benchmark(const std::filesystem::path& path);
std::string serialize_benchmark(const Benchmark& benchmark);
void save_benchmark(const Benchmark& benchmark, const std::filesystem::path& path);

enum class SyntheticFamilyKind { kShiftedQuadratic, kShiftedBranin, kShiftedCategorical };

std::string_view family_token(SyntheticFamilyKind kind);
// Accepts "shifted-quadratic" as well as "shifted_quadratic".
SyntheticFamilyKind parse_family(std::string_view token);

struct SyntheticSpec {
  SyntheticFamilyKind family = SyntheticFamilyKind::kShiftedQuadratic;
  std::size_t n_tasks = 6;
  double shift_scale = 0.1;
  std::size_t n_grid = 2000;
  double noise_std = 0.0;
  // Negates the surface of every odd-indexed task.
  bool adversarial = false;
};

// Throws Error(kInvalidArgument) when n_tasks < 2, n_grid < 100, or a scale
// is negative / non-finite.
void validate_synthetic_spec(const SyntheticSpec& spec);

struct SyntheticFamily {
  Benchmark benchmark;
  // Noise-free objective per task over the shared grid (rows align with the
  // task tables).
  std::vector<std::vector<double>> true_values;
};

SyntheticFamily generate_synthetic_family(const SyntheticSpec& spec, std::uint64_t seed);

// Ranking similarity between the true surfaces of every task pair, using
// task i's values as the predictor of task j's.
Eigen::MatrixXd true_similarity_matrix(const SyntheticFamily& family);

}  // namespace spacetx
