#include "spacetx/results_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "spacetx/error.hpp"

namespace spacetx {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot move results into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kParse, where + ": bad number \"" + s + "\"");
  }
  return v;
}

}  // namespace

std::string method_csv(const ResultSet& results, const std::string& method) {
  std::string out = "task,rep,trial,incumbent,nce,space_size\n";
  for (const auto& t : results.tasks) {
    for (std::size_t r = 0; r < results.protocol.reps; ++r) {
      auto it = results.cells.find(CellKey{t, method, r});
      if (it == results.cells.end()) continue;
      const CellResult& cell = it->second;
      for (std::size_t i = 0; i < cell.nce.size(); ++i) {
        out += csv_field(t) + ',' + std::to_string(r) + ',' + std::to_string(i + 1) + ',' +
               format_double(cell.incumbent[i]) + ',' + format_double(cell.nce[i]) + ',' +
               std::to_string(cell.space_size[i]) + '\n';
      }
    }
  }
  return out;
}

std::string aggregate_csv(const ResultSet& results, const Aggregate& agg) {
  std::string out = "method,trial,mean_nce,std_nce\n";
  for (const auto& m : results.methods) {
    const Curve& c = agg.methods.at(m);
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      out += csv_field(m) + ',' + std::to_string(i + 1) + ',' + format_double(c.mean[i]) +
             ',' + format_double(c.std[i]) + '\n';
    }
  }
  return out;
}

std::string per_task_csv(const ResultSet& results, const Aggregate& agg) {
  std::string out = "method,task,trial,mean_nce,std_nce\n";
  for (const auto& m : results.methods) {
    for (const auto& t : results.tasks) {
      const Curve& c = agg.per_task.at({m, t});
      for (std::size_t i = 0; i < c.mean.size(); ++i) {
        out += csv_field(m) + ',' + csv_field(t) + ',' + std::to_string(i + 1) + ',' +
               format_double(c.mean[i]) + ',' + format_double(c.std[i]) + '\n';
      }
    }
  }
  return out;
}

nlohmann::json protocol_to_json(const ProtocolConfig& p) {
  nlohmann::json gp = {
      {"kernel", p.gp.kernel == KernelKind::kMatern52Ard ? "matern52" : "squared_exponential"},
      {"noise_floor", p.gp.noise_floor},
      {"restarts", p.gp.restarts},
      {"max_opt_iters", p.gp.max_opt_iters}};
  nlohmann::json design = {{"alpha_min", p.design.alpha_min},
                           {"alpha_max", p.design.alpha_max},
                           {"k", p.design.k},
                           {"n_candidates", p.design.n_candidates},
                           {"min_space_size", p.design.min_space_size}};
  // jobs is left out: it never changes results.
  return {{"n_source", p.n_source}, {"n_trials", p.n_trials}, {"n_init", p.n_init},
          {"reps", p.reps},         {"base_seed", p.base_seed}, {"gp", gp},
          {"design", design}};
}

ProtocolConfig protocol_from_json(const nlohmann::json& j) {
  try {
    ProtocolConfig p;
    p.n_source = j.at("n_source").get<std::size_t>();
    p.n_trials = j.at("n_trials").get<std::size_t>();
    p.n_init = j.at("n_init").get<std::size_t>();
    p.reps = j.at("reps").get<std::size_t>();
    p.base_seed = j.at("base_seed").get<std::uint64_t>();
    const auto& gp = j.at("gp");
    const auto kernel = gp.at("kernel").get<std::string>();
    if (kernel == "matern52") {
      p.gp.kernel = KernelKind::kMatern52Ard;
    } else if (kernel == "squared_exponential") {
      p.gp.kernel = KernelKind::kSquaredExponentialArd;
    } else {
      throw Error(ErrorKind::kParse, "unknown kernel \"" + kernel + "\"");
    }
    p.gp.noise_floor = gp.at("noise_floor").get<double>();
    p.gp.restarts = gp.at("restarts").get<int>();
    p.gp.max_opt_iters = gp.at("max_opt_iters").get<int>();
    const auto& d = j.at("design");
    p.design.alpha_min = d.at("alpha_min").get<double>();
    p.design.alpha_max = d.at("alpha_max").get<double>();
    p.design.k = d.at("k").get<std::size_t>();
    p.design.n_candidates = d.at("n_candidates").get<std::size_t>();
    p.design.min_space_size = d.at("min_space_size").get<std::size_t>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("manifest protocol: ") + e.what());
  }
}

void write_results(const fs::path& dir, const ResultSet& results, nlohmann::json manifest) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string());
  const Aggregate agg = aggregate_results(results);

  manifest["protocol"] = protocol_to_json(results.protocol);
  manifest["tasks"] = results.tasks;
  manifest["methods"] = results.methods;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, cell] : results.cells) {
    cells.push_back({{"task", key.task}, {"method", key.method}, {"rep", key.rep},
                     {"seed", cell.seed}});
  }
  manifest["cells"] = std::move(cells);

  for (const auto& m : results.methods) {
    write_file_atomic(dir / (m + ".csv"), method_csv(results, m));
  }
  write_file_atomic(dir / "aggregate.csv", aggregate_csv(results, agg));
  write_file_atomic(dir / "per_task.csv", per_task_csv(results, agg));
  // Manifest last: its presence marks a finished run.
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

ResultSet read_results(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorKind::kIncomplete, "no manifest.json in " + dir.string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kParse, "manifest.json: " + std::string(e.what()));
  }
  ResultSet rs;
  try {
    rs.protocol = protocol_from_json(manifest.at("protocol"));
    rs.tasks = manifest.at("tasks").get<std::vector<std::string>>();
    rs.methods = manifest.at("methods").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("manifest.json: ") + e.what());
  }
  std::map<CellKey, std::uint64_t> seeds;
  if (manifest.contains("cells")) {
    for (const auto& c : manifest.at("cells")) {
      seeds[CellKey{c.at("task").get<std::string>(), c.at("method").get<std::string>(),
                    c.at("rep").get<std::size_t>()}] = c.at("seed").get<std::uint64_t>();
    }
  }

  for (const auto& m : rs.methods) {
    const fs::path path = dir / (m + ".csv");
    if (!fs::exists(path)) continue;
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    if (line != "task,rep,trial,incumbent,nce,space_size") {
      throw Error(ErrorKind::kParse, path.string() + ": unexpected header");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(lineno);
      auto f = split_csv_line(line);
      if (f.size() != 6) throw Error(ErrorKind::kParse, where + ": expected 6 fields");
      CellKey key{f[0], m, parse_number<std::size_t>(f[1], where)};
      const auto trial = parse_number<std::size_t>(f[2], where);
      CellResult& cell = rs.cells[key];
      if (trial != cell.nce.size() + 1) {
        throw Error(ErrorKind::kParse, where + ": trials out of order");
      }
      cell.incumbent.push_back(parse_number<double>(f[3], where));
      cell.nce.push_back(parse_number<double>(f[4], where));
      cell.space_size.push_back(parse_number<std::size_t>(f[5], where));
      if (auto s = seeds.find(key); s != seeds.end()) cell.seed = s->second;
    }
  }
  // A cell shorter than the protocol's trial count is incomplete.
  for (auto it = rs.cells.begin(); it != rs.cells.end();) {
    if (it->second.nce.size() != rs.protocol.n_trials) {
      it = rs.cells.erase(it);
    } else {
      ++it;
    }
  }
  return rs;
}

}  // namespace spacetx
