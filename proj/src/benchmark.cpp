#include "spacetx/benchmark.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "spacetx/error.hpp"
#include "spacetx/results_io.hpp"
#include "spacetx/transfer.hpp"

namespace spacetx {

namespace {

[[noreturn]] void invalid_task(const std::string& task, const std::string& what) {
  throw Error(ErrorKind::kValidation, "task \"" + task + "\": " + what);
}

void finalize_task(const SearchSpace& space, BenchmarkTask& task) {
  if (task.id.empty()) invalid_task(task.id, "empty task id");
  if (task.configs.size() != task.ys.size()) {
    invalid_task(task.id, "configs and ys differ in length");
  }
  if (task.ys.empty()) invalid_task(task.id, "no rows");
  task.index.clear();
  task.index.reserve(task.size());
  for (std::size_t r = 0; r < task.size(); ++r) {
    auto violations = validate_config(space, task.configs[r]);
    if (!violations.empty()) {
      std::string msg = "row " + std::to_string(r) + ":";
      for (const auto& v : violations) {
        msg += " parameter \"" + v.parameter + "\" " + v.message + ";";
      }
      msg.pop_back();
      invalid_task(task.id, msg);
    }
    if (!std::isfinite(task.ys[r])) {
      invalid_task(task.id, "row " + std::to_string(r) + ": y is not finite");
    }
    auto [it, inserted] = task.index.emplace(canonical_key(task.configs[r]), r);
    if (!inserted) {
      invalid_task(task.id, "row " + std::to_string(r) + " duplicates row " +
                                std::to_string(it->second));
    }
  }
  auto [lo, hi] = std::minmax_element(task.ys.begin(), task.ys.end());
  task.y_min = *lo;
  task.y_max = *hi;
  if (!(task.y_min < task.y_max)) invalid_task(task.id, "degenerate task (constant y)");
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text,
                                                    std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

Benchmark::Benchmark(SearchSpace space, std::vector<BenchmarkTask> tasks)
    : space_(std::move(space)), tasks_(std::move(tasks)) {
  require_valid_space(space_);
  if (tasks_.empty()) throw Error(ErrorKind::kValidation, "benchmark has no tasks");
  std::unordered_set<std::string> ids;
  for (auto& t : tasks_) {
    if (!ids.insert(t.id).second) invalid_task(t.id, "duplicate task id");
    finalize_task(space_, t);
  }
}

const BenchmarkTask& Benchmark::task(std::string_view id) const {
  return tasks_[task_index(id)];
}

std::size_t Benchmark::task_index(std::string_view id) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].id == id) return i;
  }
  throw Error(ErrorKind::kNotFound, "unknown task \"" + std::string(id) + "\"");
}

double Benchmark::evaluate(std::string_view task_id, const Configuration& config) const {
  const auto& t = task(task_id);
  auto it = t.index.find(canonical_key(config));
  if (it == t.index.end()) {
    throw Error(ErrorKind::kNotFound,
                "configuration not in table of task \"" + t.id + "\"");
  }
  return t.ys[it->second];
}

Benchmark parse_benchmark(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_and_column(json_text, e.byte);
    throw Error(ErrorKind::kParse, "benchmark parse error at line " +
                                       std::to_string(line) + ", column " +
                                       std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("space") || !doc.contains("tasks")) {
    throw Error(ErrorKind::kParse, "benchmark must be an object with \"space\" and \"tasks\"");
  }
  SearchSpace space = space_from_json(doc.at("space"));
  const auto& jtasks = doc.at("tasks");
  if (!jtasks.is_array()) throw Error(ErrorKind::kParse, "\"tasks\" must be an array");

  std::vector<BenchmarkTask> tasks;
  tasks.reserve(jtasks.size());
  for (std::size_t ti = 0; ti < jtasks.size(); ++ti) {
    const auto& jt = jtasks[ti];
    if (!jt.is_object() || !jt.contains("id") || !jt.at("id").is_string() ||
        !jt.contains("rows") || !jt.at("rows").is_array()) {
      throw Error(ErrorKind::kParse, "tasks[" + std::to_string(ti) +
                                         "] needs a string \"id\" and a \"rows\" array");
    }
    BenchmarkTask task;
    task.id = jt.at("id").get<std::string>();
    const auto& rows = jt.at("rows");
    task.configs.reserve(rows.size());
    task.ys.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (!row.is_object() || !row.contains("config") || !row.contains("y") ||
          !row.at("y").is_number()) {
        invalid_task(task.id, "row " + std::to_string(r) +
                                  " needs \"config\" and a numeric \"y\"");
      }
      try {
        task.configs.push_back(config_from_json(space, row.at("config")));
      } catch (const Error& e) {
        invalid_task(task.id, "row " + std::to_string(r) + ": " + e.what());
      }
      task.ys.push_back(row.at("y").get<double>());
    }
    tasks.push_back(std::move(task));
  }
  return Benchmark(std::move(space), std::move(tasks));
}

Benchmark load_tabular_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open benchmark " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_benchmark(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string serialize_benchmark(const Benchmark& benchmark) {
  // Rows are written one per line so large tables stay diffable.
  std::string out = "{\"space\":" + space_to_json(benchmark.space()).dump() +
                    ",\n\"tasks\":[";
  const auto& tasks = benchmark.tasks();
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const auto& t = tasks[ti];
    out += ti ? ",\n{" : "\n{";
    out += "\"id\":" + nlohmann::json(t.id).dump() + ",\"rows\":[";
    for (std::size_t r = 0; r < t.size(); ++r) {
      nlohmann::json row = {{"config", config_to_json(benchmark.space(), t.configs[r])},
                            {"y", t.ys[r]}};
      out += r ? ",\n" : "\n";
      out += row.dump();
    }
    out += "]}";
  }
  out += "]}\n";
  return out;
}

void save_benchmark(const Benchmark& benchmark, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_benchmark(benchmark));
}

std::string_view family_token(SyntheticFamilyKind kind) {
  switch (kind) {
    case SyntheticFamilyKind::kShiftedQuadratic: return "shifted-quadratic";
    case SyntheticFamilyKind::kShiftedBranin: return "shifted-branin";
    case SyntheticFamilyKind::kShiftedCategorical: return "shifted-categorical";
  }
  return "";
}

SyntheticFamilyKind parse_family(std::string_view token) {
  std::string t(token);
  std::replace(t.begin(), t.end(), '_', '-');
  for (auto k : {SyntheticFamilyKind::kShiftedQuadratic, SyntheticFamilyKind::kShiftedBranin,
                 SyntheticFamilyKind::kShiftedCategorical}) {
    if (family_token(k) == t) return k;
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown family \"" + std::string(token) +
                  "\" (expected shifted-quadratic, shifted-branin or shifted-categorical)");
}

namespace {

constexpr std::size_t kQuadraticDim = 6;
constexpr std::size_t kCategoricalParams = 6;
const std::array<const char*, 5> kOps = {"none", "skip_connect", "conv_1x1", "conv_3x3",
                                         "avg_pool_3x3"};

std::size_t categorical_universe() {
  std::size_t n = 1;
  for (std::size_t p = 0; p < kCategoricalParams; ++p) n *= kOps.size();
  return n;
}

SearchSpace family_space(SyntheticFamilyKind kind) {
  std::vector<ParameterDef> params;
  switch (kind) {
    case SyntheticFamilyKind::kShiftedQuadratic:
      for (std::size_t j = 0; j < kQuadraticDim; ++j) {
        params.push_back(continuous_param("x" + std::to_string(j), 0.0, 1.0, 0.5));
      }
      break;
    case SyntheticFamilyKind::kShiftedBranin:
      params.push_back(continuous_param("x0", -5.0, 10.0, 2.5));
      params.push_back(continuous_param("x1", 0.0, 15.0, 7.5));
      break;
    case SyntheticFamilyKind::kShiftedCategorical: {
      std::vector<std::string> ops(kOps.begin(), kOps.end());
      for (std::size_t p = 0; p < kCategoricalParams; ++p) {
        params.push_back(categorical_param("edge" + std::to_string(p), ops, ops[0]));
      }
      break;
    }
  }
  return SearchSpace(std::move(params));
}

Eigen::VectorXd random_direction(Rng& rng, std::size_t dim) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = standard_normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

double branin(double x1, double x2) {
  constexpr double kPi = 3.14159265358979323846;
  const double b = 5.1 / (4.0 * kPi * kPi);
  const double c = 5.0 / kPi;
  const double t = 1.0 / (8.0 * kPi);
  const double a = x2 - b * x1 * x1 + c * x1 - 6.0;
  return a * a + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

std::vector<Configuration> sample_grid(const SearchSpace& space, std::size_t n, Rng& rng) {
  std::vector<Configuration> grid;
  std::unordered_set<std::string> seen;
  grid.reserve(n);
  while (grid.size() < n) {
    for (auto& c : sample_uniform(space, n - grid.size(), rng)) {
      if (seen.insert(canonical_key(c)).second) grid.push_back(std::move(c));
    }
  }
  return grid;
}

// Objective of one task evaluated on the whole grid.
using Surface = std::function<double(const Configuration&)>;

Surface make_surface(SyntheticFamilyKind kind, const SearchSpace& space, Rng& base_rng,
                     Rng& task_rng, double shift_scale) {
  switch (kind) {
    case SyntheticFamilyKind::kShiftedQuadratic: {
      Eigen::VectorXd center(kQuadraticDim);
      for (Eigen::Index j = 0; j < center.size(); ++j) {
        center(j) = 0.25 + 0.5 * uniform01(base_rng);
      }
      center += shift_scale * random_direction(task_rng, kQuadraticDim);
      return [center, &space](const Configuration& c) {
        const Eigen::VectorXd d = encode(space, c) - center;
        return d.squaredNorm();
      };
    }
    case SyntheticFamilyKind::kShiftedBranin: {
      Eigen::VectorXd shift = shift_scale * random_direction(task_rng, 2);
      return [shift](const Configuration& c) {
        const double x1 = std::get<double>(c.values[0]) - 15.0 * shift(0);
        const double x2 = std::get<double>(c.values[1]) - 15.0 * shift(1);
        return branin(x1, x2);
      };
    }
    case SyntheticFamilyKind::kShiftedCategorical: {
      const std::size_t n_ops = kOps.size();
      // Per-edge costs plus costs on adjacent edge pairs.
      Eigen::MatrixXd unary(kCategoricalParams, n_ops);
      Eigen::MatrixXd pair(n_ops, n_ops);
      for (Eigen::Index i = 0; i < unary.size(); ++i) unary(i) = standard_normal(base_rng);
      for (Eigen::Index i = 0; i < pair.size(); ++i) pair(i) = 0.3 * standard_normal(base_rng);
      for (Eigen::Index i = 0; i < unary.size(); ++i) {
        unary(i) += shift_scale * standard_normal(task_rng);
      }
      auto choice = [](const Value& v) {
        const auto& s = std::get<std::string>(v);
        return static_cast<Eigen::Index>(
            std::find(kOps.begin(), kOps.end(), s) - kOps.begin());
      };
      return [unary, pair, choice](const Configuration& c) {
        double y = 0.0;
        for (std::size_t p = 0; p < kCategoricalParams; ++p) {
          const auto a = choice(c.values[p]);
          y += unary(static_cast<Eigen::Index>(p), a);
          if (p + 1 < kCategoricalParams) y += pair(a, choice(c.values[p + 1]));
        }
        return y;
      };
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown family");
}

}  // namespace

void validate_synthetic_spec(const SyntheticSpec& spec) {
  if (spec.n_tasks < 2) throw Error(ErrorKind::kInvalidArgument, "n_tasks must be >= 2");
  if (spec.n_grid < 100) throw Error(ErrorKind::kInvalidArgument, "n_grid must be >= 100");
  if (!std::isfinite(spec.shift_scale) || spec.shift_scale < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "shift_scale must be finite and >= 0");
  }
  if (!std::isfinite(spec.noise_std) || spec.noise_std < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "noise_std must be finite and >= 0");
  }
  if (spec.family == SyntheticFamilyKind::kShiftedCategorical &&
      spec.n_grid > categorical_universe()) {
    throw Error(ErrorKind::kInvalidArgument,
                "n_grid exceeds the " + std::to_string(categorical_universe()) +
                    " distinct configurations of shifted-categorical");
  }
}

SyntheticFamily generate_synthetic_family(const SyntheticSpec& spec, std::uint64_t seed) {
  validate_synthetic_spec(spec);
  const std::string_view token = family_token(spec.family);
  SearchSpace space = family_space(spec.family);
  Rng grid_rng(stable_hash(seed, token, std::string_view("grid")));
  auto grid = sample_grid(space, spec.n_grid, grid_rng);

  SyntheticFamily out;
  std::vector<BenchmarkTask> tasks;
  for (std::size_t i = 0; i < spec.n_tasks; ++i) {
    // Every task replays the same base stream so only the shift differs.
    Rng base_rng(stable_hash(seed, token, std::string_view("base")));
    Rng task_rng(stable_hash(seed, token, std::string_view("shift"), std::uint64_t{i}));
    Rng noise_rng(stable_hash(seed, token, std::string_view("noise"), std::uint64_t{i}));
    auto surface = make_surface(spec.family, space, base_rng, task_rng, spec.shift_scale);
    const double sign = (spec.adversarial && i % 2 == 1) ? -1.0 : 1.0;

    BenchmarkTask task;
    task.id = "task" + std::to_string(i);
    task.configs = grid;
    std::vector<double> truth(grid.size());
    task.ys.resize(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
      truth[r] = sign * surface(grid[r]);
      task.ys[r] = truth[r];
      if (spec.noise_std > 0.0) task.ys[r] += spec.noise_std * standard_normal(noise_rng);
    }
    out.true_values.push_back(std::move(truth));
    tasks.push_back(std::move(task));
  }
  out.benchmark = Benchmark(std::move(space), std::move(tasks));
  return out;
}

Eigen::MatrixXd true_similarity_matrix(const SyntheticFamily& family) {
  const auto n = static_cast<Eigen::Index>(family.true_values.size());
  Eigen::MatrixXd sim = Eigen::MatrixXd::Ones(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = task_similarity(family.true_values[static_cast<std::size_t>(i)],
                                       family.true_values[static_cast<std::size_t>(j)]);
      sim(i, j) = s;
      sim(j, i) = s;
    }
  }
  return sim;
}

}  // namespace spacetx
