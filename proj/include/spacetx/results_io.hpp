#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "spacetx/harness.hpp"

namespace spacetx {

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Shortest text that parses back to the same double.
std::string format_double(double v);

// task,rep,trial,incumbent,nce,space_size rows of one method, in task, rep,
// trial order.
std::string method_csv(const ResultSet& results, const std::string& method);
// method,trial,mean_nce,std_nce
std::string aggregate_csv(const ResultSet& results, const Aggregate& agg);
// method,task,trial,mean_nce,std_nce
std::string per_task_csv(const ResultSet& results, const Aggregate& agg);

nlohmann::json protocol_to_json(const ProtocolConfig& protocol);
ProtocolConfig protocol_from_json(const nlohmann::json& j);

// Writes <method>.csv per method, aggregate.csv, per_task.csv and
// manifest.json (the given manifest plus the protocol and per-cell seeds).
void write_results(const std::filesystem::path& dir, const ResultSet& results,
                   nlohmann::json manifest);

// Reads a directory written by write_results. Cells absent from the CSVs are
// left out; use ResultSet::missing() to list them.
ResultSet read_results(const std::filesystem::path& dir);

}  // namespace spacetx
