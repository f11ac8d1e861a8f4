#include "spacetx/commands.hpp"

#include <algorithm>
#include <cstdio>

#include "spacetx/error.hpp"
#include "spacetx/optimizer.hpp"
#include "spacetx/results_io.hpp"

namespace spacetx {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

nlohmann::json run_manifest(const RunRequest& request, std::string_view benchmark_text) {
  return {{"command", "run"},
          {"benchmark", request.benchmark.string()},
          {"benchmark_hash", hex64(stable_hash(benchmark_text))},
          {"method_list", request.methods}};
}

RunRequest request_from_manifest(const fs::path& manifest_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, manifest_path.string() + ": " + e.what());
  }
  RunRequest req;
  try {
    req.benchmark = j.at("benchmark").get<std::string>();
    req.methods = j.at("method_list").get<std::string>();
    req.protocol = protocol_from_json(j.at("protocol"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, manifest_path.string() + ": " + e.what());
  }
  if (req.benchmark.is_relative() && !fs::exists(req.benchmark)) {
    req.benchmark = manifest_path.parent_path() / req.benchmark;
  }
  if (j.contains("benchmark_hash")) {
    const std::string want = j.at("benchmark_hash").get<std::string>();
    if (hex64(stable_hash(std::string_view(read_file(req.benchmark)))) != want) {
      throw Error(ErrorKind::kValidation,
                  "benchmark " + req.benchmark.string() + " changed since the run");
    }
  }
  return req;
}

ResultSet execute_run(const RunRequest& request, const ProgressFn& progress) {
  validate_protocol(request.protocol);
  const auto methods = parse_methods(request.methods, request.protocol.design);
  const std::string text = read_file(request.benchmark);
  Benchmark benchmark;
  try {
    benchmark = parse_benchmark(text);
  } catch (const Error& e) {
    throw Error(e.kind(), request.benchmark.string() + ": " + e.what());
  }
  ResultSet results = run_leave_one_out(benchmark, methods, request.protocol, progress);
  write_results(request.out_dir, results, run_manifest(request, text));
  return results;
}

std::string similarity_summary(const Eigen::MatrixXd& sim,
                               const std::vector<std::string>& task_ids) {
  std::string out = "true-surface similarity (row task as predictor of column task)\n";
  std::size_t width = 6;
  for (const auto& id : task_ids) width = std::max(width, id.size() + 1);
  auto pad = [width](std::string s) {
    s.resize(std::max(s.size(), width), ' ');
    return s;
  };
  out += pad("");
  for (const auto& id : task_ids) out += pad(id);
  out += '\n';
  double lo = 1.0, hi = 0.0, sum = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < sim.rows(); ++i) {
    out += pad(task_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < sim.cols(); ++j) {
      out += pad(fixed(sim(i, j), 3));
      if (j > i) {
        lo = std::min(lo, sim(i, j));
        hi = std::max(hi, sim(i, j));
        sum += sim(i, j);
        ++pairs;
      }
    }
    out += '\n';
  }
  if (pairs > 0) {
    out += "pairs: min " + fixed(lo, 3) + "  mean " + fixed(sum / pairs, 3) + "  max " +
           fixed(hi, 3) + '\n';
  }
  return out;
}

std::string execute_genbench(const GenbenchRequest& request) {
  if (request.out.empty()) throw Error(ErrorKind::kInvalidArgument, "no output path given");
  SyntheticFamily family = generate_synthetic_family(request.spec, request.seed);
  save_benchmark(family.benchmark, request.out);
  std::vector<std::string> ids;
  for (const auto& t : family.benchmark.tasks()) ids.push_back(t.id);
  return similarity_summary(true_similarity_matrix(family), ids);
}

ReportFormat parse_report_format(std::string_view token) {
  if (token == "table") return ReportFormat::kTable;
  if (token == "plotdata") return ReportFormat::kPlotData;
  throw Error(ErrorKind::kInvalidArgument,
              "unknown report format \"" + std::string(token) + "\" (table, plotdata)");
}

std::string render_report(const fs::path& results_dir, ReportFormat format,
                          const fs::path& plot_dir) {
  if (!fs::is_directory(results_dir)) {
    throw Error(ErrorKind::kIncomplete, "no results directory " + results_dir.string());
  }
  const ResultSet rs = read_results(results_dir);
  const Aggregate agg = aggregate_results(rs);

  if (format == ReportFormat::kTable) {
    std::vector<std::pair<double, std::string>> rows;
    for (const auto& m : rs.methods) rows.emplace_back(agg.methods.at(m).mean.back(), m);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t width = 8;
    for (const auto& [_, m] : rows) width = std::max(width, m.size() + 2);
    auto pad = [width](std::string s) {
      s.resize(std::max(s.size(), width), ' ');
      return s;
    };
    std::string out = pad("method") + "final_nce  std     (trial " +
                      std::to_string(rs.protocol.n_trials) + ", " +
                      std::to_string(rs.tasks.size()) + " tasks x " +
                      std::to_string(rs.protocol.reps) + " reps)\n";
    for (const auto& [v, m] : rows) {
      out += pad(m) + fixed(v, 4) + "     " + fixed(agg.methods.at(m).std.back(), 4) + '\n';
    }
    return out;
  }

  const fs::path dir = plot_dir.empty() ? results_dir / "plotdata" : plot_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string());
  std::string listing;
  for (const auto& m : rs.methods) {
    const Curve& c = agg.methods.at(m);
    std::string body = "# trial mean_nce std_nce lower upper\n";
    for (std::size_t t = 0; t < c.mean.size(); ++t) {
      body += std::to_string(t + 1) + ' ' + format_double(c.mean[t]) + ' ' +
              format_double(c.std[t]) + ' ' + format_double(c.mean[t] - c.std[t]) + ' ' +
              format_double(c.mean[t] + c.std[t]) + '\n';
    }
    const fs::path file = dir / (m + ".dat");
    write_file_atomic(file, body);
    listing += file.string() + '\n';
  }
  return listing;
}

}  // namespace spacetx
