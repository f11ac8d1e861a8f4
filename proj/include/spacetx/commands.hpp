#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "spacetx/benchmark.hpp"
#include "spacetx/harness.hpp"

namespace spacetx {

struct RunRequest {
  std::filesystem::path benchmark;
  std::string methods;
  ProtocolConfig protocol;
  std::filesystem::path out_dir;
};

// Everything needed to replay a run, minus the output directory.
nlohmann::json run_manifest(const RunRequest& request, std::string_view benchmark_text);
// Reads manifest.json; the benchmark file must still hash to the recorded
// value.
RunRequest request_from_manifest(const std::filesystem::path& manifest_path);

// Loads the benchmark, runs leave-one-out and writes the result files.
// Bad method tokens throw Error(kBadMethod) before any work starts.
ResultSet execute_run(const RunRequest& request, const ProgressFn& progress = {});

struct GenbenchRequest {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

// Writes the benchmark and returns a pairwise true-similarity summary.
std::string execute_genbench(const GenbenchRequest& request);
std::string similarity_summary(const Eigen::MatrixXd& sim,
                               const std::vector<std::string>& task_ids);

enum class ReportFormat { kTable, kPlotData };
ReportFormat parse_report_format(std::string_view token);

// kTable returns the table text. kPlotData writes <method>.dat per method
// into plot_dir (default: <results>/plotdata) and returns the file list.
// Incomplete results throw Error(kIncomplete) naming the missing cells.
std::string render_report(const std::filesystem::path& results_dir, ReportFormat format,
                          const std::filesystem::path& plot_dir = {});

}  // namespace spacetx
