#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "spacetx/spacetx.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spacetx_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(SPACETX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kTiny = R"({"space": {"params": [
  {"name": "x", "type": "continuous", "low": 0, "high": 1}]},
 "tasks": [{"id": "a", "rows": [{"config": {"x": 0.25}, "y": 1.5},
                                {"config": {"x": 0.75}, "y": 0.5}]}]})";

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(spacetx_version(), "0.1.0");
  EXPECT_STREQ(spacetx_status_name(SPACETX_OK), "ok");
  EXPECT_STRNE(spacetx_status_name(SPACETX_ERR_BAD_METHOD), "ok");
  EXPECT_STREQ(spacetx_last_error(), "");
}

TEST(CApi, NullArgumentsAreRejected) {
  spacetx_benchmark* b = nullptr;
  EXPECT_EQ(spacetx_benchmark_load(nullptr, &b), SPACETX_ERR_INVALID_ARGUMENT);
  EXPECT_STRNE(spacetx_last_error(), "");
  EXPECT_EQ(spacetx_benchmark_parse(kTiny, std::string(kTiny).size(), nullptr),
            SPACETX_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(spacetx_benchmark_task_count(nullptr), 0u);
  EXPECT_EQ(spacetx_run(nullptr, nullptr, nullptr), SPACETX_ERR_INVALID_ARGUMENT);
  spacetx_benchmark_free(nullptr);
}

TEST(CApi, ParseAndEvaluate) {
  spacetx_benchmark* b = nullptr;
  ASSERT_EQ(spacetx_benchmark_parse(kTiny, std::string(kTiny).size(), &b), SPACETX_OK);
  EXPECT_STREQ(spacetx_last_error(), "");
  EXPECT_EQ(spacetx_benchmark_task_count(b), 1u);
  EXPECT_STREQ(spacetx_benchmark_task_id(b, 0), "a");
  EXPECT_EQ(spacetx_benchmark_task_id(b, 1), nullptr);
  EXPECT_EQ(spacetx_benchmark_task_rows(b, 0), 2u);
  double y = 0;
  ASSERT_EQ(spacetx_benchmark_evaluate(b, "a", R"({"x": 0.75})", &y), SPACETX_OK);
  EXPECT_EQ(y, 0.5);
  EXPECT_EQ(spacetx_benchmark_evaluate(b, "a", R"({"x": 0.5})", &y), SPACETX_ERR_NOT_FOUND);
  EXPECT_EQ(spacetx_benchmark_evaluate(b, "a", "{", &y), SPACETX_ERR_PARSE);
  double sim[1];
  EXPECT_EQ(spacetx_benchmark_true_similarity(b, sim, 1), SPACETX_ERR_NOT_FOUND);
  spacetx_benchmark_free(b);

  EXPECT_EQ(spacetx_benchmark_parse("{\"space\": 3}", 12, &b), SPACETX_ERR_PARSE);
  EXPECT_EQ(b, nullptr);
}

TEST(CApi, GenerateSaveLoad) {
  const fs::path dir = scratch("gen");
  spacetx_synthetic_spec spec;
  spacetx_synthetic_spec_defaults(&spec);
  spec.n_tasks = 3;
  spec.shift_scale = 0.0;
  spec.n_grid = 200;
  spacetx_benchmark* b = nullptr;
  ASSERT_EQ(spacetx_benchmark_generate(&spec, 5, &b), SPACETX_OK);
  std::vector<double> sim(9);
  EXPECT_EQ(spacetx_benchmark_true_similarity(b, sim.data(), 4), SPACETX_ERR_INVALID_ARGUMENT);
  ASSERT_EQ(spacetx_benchmark_true_similarity(b, sim.data(), sim.size()), SPACETX_OK);
  for (double s : sim) EXPECT_NEAR(s, 1.0, 1e-12);
  char* summary = nullptr;
  ASSERT_EQ(spacetx_benchmark_similarity_summary(b, &summary), SPACETX_OK);
  EXPECT_NE(std::string(summary).find("1"), std::string::npos);
  spacetx_string_free(summary);

  const std::string path = (dir / "b.json").string();
  ASSERT_EQ(spacetx_benchmark_save(b, path.c_str()), SPACETX_OK);
  spacetx_benchmark* again = nullptr;
  ASSERT_EQ(spacetx_benchmark_load(path.c_str(), &again), SPACETX_OK);
  EXPECT_EQ(spacetx_benchmark_task_count(again), 3u);
  EXPECT_EQ(spacetx_benchmark_task_rows(again, 2), 200u);
  spacetx_benchmark_free(again);
  spacetx_benchmark_free(b);

  spec.n_tasks = 1;
  EXPECT_EQ(spacetx_benchmark_generate(&spec, 5, &b), SPACETX_ERR_INVALID_ARGUMENT);
  spec.n_tasks = 3;
  spec.family = "sphere";
  EXPECT_NE(spacetx_benchmark_generate(&spec, 5, &b), SPACETX_OK);
  EXPECT_EQ(spacetx_benchmark_load((dir / "none.json").string().c_str(), &b), SPACETX_ERR_IO);
  fs::remove_all(dir);
}

TEST(CApi, ValidateMethods) {
  EXPECT_EQ(spacetx_validate_methods("rs,gp,box-gp,ellipsoid-gp,ours-gp"), SPACETX_OK);
  EXPECT_EQ(spacetx_validate_methods("gp,turbo-gp"), SPACETX_ERR_BAD_METHOD);
  EXPECT_NE(std::string(spacetx_last_error()).find("turbo-gp"), std::string::npos);
}

TEST(CApi, RunAndReport) {
  const fs::path dir = scratch("run");
  spacetx_synthetic_spec spec;
  spacetx_synthetic_spec_defaults(&spec);
  spec.family = "shifted-branin";
  spec.n_tasks = 3;
  spec.n_grid = 150;
  spacetx_benchmark* b = nullptr;
  ASSERT_EQ(spacetx_benchmark_generate(&spec, 2, &b), SPACETX_OK);
  const std::string bench = (dir / "bench.json").string();
  ASSERT_EQ(spacetx_benchmark_save(b, bench.c_str()), SPACETX_OK);
  spacetx_benchmark_free(b);

  spacetx_run_options o;
  spacetx_run_options_defaults(&o);
  const std::string out = (dir / "results").string();
  o.benchmark_path = bench.c_str();
  o.methods = "rs,ours-gp";
  o.out_dir = out.c_str();
  o.trial_num = 6;
  o.reps = 1;
  o.n_source = 20;
  o.jobs = 1;
  std::size_t cells = 0;
  auto count = [](const char*, const char*, size_t, void* user) { ++*static_cast<std::size_t*>(user); };
  ASSERT_EQ(spacetx_run(&o, count, &cells), SPACETX_OK) << spacetx_last_error();
  EXPECT_EQ(cells, 6u);
  for (const char* f : {"rs.csv", "ours-gp.csv", "aggregate.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "results" / f)) << f;
  }

  char* table = nullptr;
  ASSERT_EQ(spacetx_report(out.c_str(), "table", nullptr, &table), SPACETX_OK);
  EXPECT_EQ(std::string(table).rfind("method", 0), 0u);
  spacetx_string_free(table);
  EXPECT_EQ(spacetx_report(out.c_str(), "chart", nullptr, &table), SPACETX_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(spacetx_report((dir / "nothing").string().c_str(), "table", nullptr, &table),
            SPACETX_ERR_INCOMPLETE);

  o.methods = "rs,xx";
  EXPECT_EQ(spacetx_run(&o, nullptr, nullptr), SPACETX_ERR_BAD_METHOD);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const std::string bench = (dir / "b.json").string();
  EXPECT_EQ(cli("genbench --family shifted-branin --n-tasks 1 --out " + bench), 2);
  EXPECT_EQ(cli("genbench --family shifted-branin --n-tasks 3 --n-grid 150 --seed 4 --out " + bench), 0);
  EXPECT_EQ(cli("run --benchmark " + bench + " --methods gp,nope-gp --out " + (dir / "r").string()), 2);
  EXPECT_EQ(cli("run --methods gp"), 2);
  {
    std::ofstream junk(dir / "junk.json");
    junk << "{\"space\": {\"params\": []}, \"tasks\": []}";
  }
  EXPECT_EQ(cli("run --benchmark " + (dir / "junk.json").string() + " --methods gp --out " +
                (dir / "r").string()),
            1);
  fs::create_directories(dir / "empty");
  EXPECT_EQ(cli("report --results " + (dir / "empty").string()), 1);
  EXPECT_EQ(cli("frobnicate"), 2);
  fs::remove_all(dir);
}

TEST(Cli, RunWritesResultsAndManifestReplays) {
  const fs::path dir = scratch("replay");
  const std::string bench = (dir / "b.json").string();
  ASSERT_EQ(cli("genbench --family shifted-quadratic --n-tasks 3 --n-grid 200 --seed 8 --out " + bench), 0);
  const fs::path first = dir / "first";
  ASSERT_EQ(cli("run --benchmark " + bench + " --methods gp,ours-gp --trial-num 7 --rep 1"
                " --n-source 25 --seed 3 --jobs 1 --out " + first.string()),
            0);
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(first)) csvs += e.path().extension() == ".csv";
  EXPECT_EQ(csvs, 4u);  // two methods, aggregate, per-task
  EXPECT_TRUE(fs::exists(first / "manifest.json"));

  const fs::path second = dir / "second";
  ASSERT_EQ(cli("run --manifest " + (first / "manifest.json").string() + " --jobs 2 --out " +
                second.string()),
            0);
  for (const char* f : {"gp.csv", "ours-gp.csv", "aggregate.csv", "per_task.csv"}) {
    EXPECT_EQ(slurp(first / f), slurp(second / f)) << f;
  }
  EXPECT_EQ(cli("report --results " + first.string() + " --format plotdata --out " +
                (dir / "plots").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "plots" / "gp.dat"));
  fs::remove_all(dir);
}
