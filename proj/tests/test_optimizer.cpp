#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "spacetx/error.hpp"
#include "spacetx/optimizer.hpp"

using namespace spacetx;

namespace {

const SearchSpace& line_space() {
  static const SearchSpace s({continuous_param("x", 0, 1, 0.5)});
  return s;
}

CandidatePool line_pool(std::size_t n) {
  std::vector<Configuration> cs;
  for (std::size_t i = 0; i < n; ++i) {
    cs.push_back(Configuration{{static_cast<double>(i) / static_cast<double>(n - 1)}});
  }
  return CandidatePool::build(line_space(), std::move(cs));
}

double wiggle(const Configuration& c) {
  const double x = std::get<double>(c.values[0]);
  return std::sin(9 * x) + 0.5 * x;
}

RunSpec line_spec(const CandidatePool& pool, std::size_t trials, std::uint64_t seed) {
  RunSpec s;
  s.space = &line_space();
  s.evaluate = wiggle;
  s.pool = &pool;
  s.trials = trials;
  s.n_init = 3;
  s.seed = seed;
  return s;
}

void check_contract(const ExperimentResult& r, std::size_t trials) {
  ASSERT_EQ(r.evaluations.size(), trials);
  ASSERT_EQ(r.incumbent_trajectory.size(), trials);
  ASSERT_EQ(r.designed_space_sizes.size(), trials);
  std::set<std::string> seen;
  double best = INFINITY;
  for (std::size_t t = 0; t < trials; ++t) {
    EXPECT_EQ(r.evaluations[t].trial, t + 1);
    EXPECT_TRUE(seen.insert(canonical_key(r.evaluations[t].config)).second);
    best = std::min(best, r.evaluations[t].y);
    EXPECT_EQ(r.incumbent_trajectory[t], best);
  }
}

}  // namespace

TEST(Methods, Parsing) {
  const auto ms = parse_methods("rs,gp,box-gp,ellipsoid-rs,ours-gp,ours-v1-gp");
  ASSERT_EQ(ms.size(), 6u);
  EXPECT_EQ(ms[0].driver, DriverKind::kRandomSearch);
  EXPECT_EQ(ms[0].designer.kind, DesignerKind::kNone);
  EXPECT_EQ(ms[2].designer.kind, DesignerKind::kBox);
  EXPECT_EQ(ms[3].driver, DriverKind::kRandomSearch);
  EXPECT_TRUE(ms[4].designer.design.has_value());
  EXPECT_FALSE(ms[2].designer.design.has_value());
  EXPECT_EQ(ms[5].designer.kind, DesignerKind::kOursArgmax);
  try {
    parse_methods("gp,foo-gp");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kBadMethod);
    EXPECT_NE(std::string(e.what()).find("foo-gp"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("ellipsoid"), std::string::npos);
  }
  EXPECT_THROW(parse_methods(""), Error);
  EXPECT_THROW(parse_methods("gp,gp"), Error);
}

TEST(InitialDesign, Examples) {
  Rng a(5), b(5);
  const auto x = initial_design(100, 3, a);
  EXPECT_EQ(x, initial_design(100, 3, b));
  EXPECT_EQ(std::set<std::size_t>(x.begin(), x.end()).size(), 3u);
  Rng c(6);
  auto all = initial_design(20, 20, c);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(initial_design(2, 3, c), Error);
}

TEST(SuggestNext, ArgmaxTiesAndFallback) {
  const CandidatePool pool = line_pool(11);
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  GpHyperparams h{KernelParams{Eigen::VectorXd::Constant(1, 0.3), 1.0}, 1e-6};
  const GpModel gp = GpModel::with_hyperparams(x, std::vector<double>{1.0, 0.0}, h);
  std::unordered_set<std::string> visited = {pool.keys[0], pool.keys[10]};
  Rng rng(1);
  const std::vector<std::size_t> one = {4};
  EXPECT_EQ(suggest_next(gp, one, pool, visited, 0.0, rng), 4u);

  const std::vector<std::size_t> two = {2, 9};
  const double ei2 = expected_improvement(gp, pool.encoded.row(2).transpose(), 0.0);
  const double ei9 = expected_improvement(gp, pool.encoded.row(9).transpose(), 0.0);
  EXPECT_EQ(suggest_next(gp, two, pool, visited, 0.0, rng), ei9 > ei2 ? 9u : 2u);

  // Both members visited: a uniform unvisited pool entry instead.
  const std::vector<std::size_t> spent = {0, 10};
  const std::size_t pick = suggest_next(gp, spent, pool, visited, 0.0, rng);
  EXPECT_NE(pick, 0u);
  EXPECT_NE(pick, 10u);

  std::unordered_set<std::string> everything(pool.keys.begin(), pool.keys.end());
  EXPECT_THROW(suggest_next(gp, spent, pool, everything, 0.0, rng), Error);
}

TEST(SuggestNext, ZeroEiTieGoesToLowerIndex) {
  const CandidatePool pool = line_pool(5);
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  GpHyperparams h{KernelParams{Eigen::VectorXd::Constant(1, 0.3), 1e-30}, 1e-6};
  const GpModel gp = GpModel::with_hyperparams(x, std::vector<double>{1.0}, h,
                                               KernelKind::kMatern52Ard, false);
  Rng rng(2);
  const std::vector<std::size_t> members = {3, 1};
  EXPECT_EQ(suggest_next(gp, members, pool, {}, -100.0, rng), 1u);
}

TEST(RunBo, LoopContract) {
  const CandidatePool pool = line_pool(50);
  auto designer = make_designer(DesignerSpec{}, line_space(), nullptr);
  const ExperimentResult r = run_bo(line_spec(pool, 10, 3), *designer);
  check_contract(r, 10);
  for (auto s : r.designed_space_sizes) EXPECT_EQ(s, 50u);
  EXPECT_EQ(r.design_traces.size(), 7u);
}

TEST(RunBo, DeterministicAndPairedInitialDesign) {
  const CandidatePool pool = line_pool(60);
  RunSpec spec = line_spec(pool, 12, 9);
  auto d1 = make_designer(DesignerSpec{}, line_space(), nullptr);
  auto d2 = make_designer(DesignerSpec{}, line_space(), nullptr);
  const auto a = run_bo(spec, *d1);
  const auto b = run_bo(spec, *d2);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_EQ(a.evaluations[t].config, b.evaluations[t].config);
    EXPECT_EQ(a.evaluations[t].y, b.evaluations[t].y);
  }
  spec.initial = {pool.configs[5], pool.configs[17], pool.configs[40]};
  auto d3 = make_designer(DesignerSpec{}, line_space(), nullptr);
  const auto c = run_bo(spec, *d3);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(c.evaluations[t].config, spec.initial[t]);
}

TEST(RunBo, InitialDesignOnly) {
  const CandidatePool pool = line_pool(30);
  RunSpec spec = line_spec(pool, 3, 1);
  auto d = make_designer(DesignerSpec{}, line_space(), nullptr);
  const auto r = run_bo(spec, *d);
  check_contract(r, 3);
  EXPECT_TRUE(r.design_traces.empty());
}

TEST(RunBo, ContinuousSpaceResamplesCandidates) {
  RunSpec spec;
  spec.space = &line_space();
  spec.evaluate = wiggle;
  spec.resample_candidates = 200;
  spec.trials = 8;
  spec.seed = 4;
  auto d = make_designer(DesignerSpec{}, line_space(), nullptr);
  const auto r = run_bo(spec, *d);
  check_contract(r, 8);
  EXPECT_EQ(r.designed_space_sizes.back(), 200u);
}

TEST(RunBo, FailingObjectiveKeepsPartialResult) {
  const CandidatePool pool = line_pool(40);
  RunSpec spec = line_spec(pool, 10, 2);
  int calls = 0;
  spec.evaluate = [&](const Configuration& c) {
    if (++calls == 6) throw std::runtime_error("evaluator crashed");
    return wiggle(c);
  };
  auto d = make_designer(DesignerSpec{}, line_space(), nullptr);
  try {
    run_bo(spec, *d);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_EQ(e.partial().evaluations.size(), 5u);
    EXPECT_NE(std::string(e.what()).find("evaluator crashed"), std::string::npos);
  }
}

TEST(RandomSearch, ExhaustsPool) {
  const CandidatePool pool = line_pool(50);
  RunSpec spec = line_spec(pool, 50, 8);
  auto d = make_designer(DesignerSpec{}, line_space(), nullptr);
  const auto r = run_random_search(spec, *d);
  check_contract(r, 50);
  double best = INFINITY;
  for (const auto& c : pool.configs) best = std::min(best, wiggle(c));
  EXPECT_EQ(r.incumbent_trajectory.back(), best);
  spec.trials = 1;
  auto d2 = make_designer(DesignerSpec{}, line_space(), nullptr);
  check_contract(run_random_search(spec, *d2), 1);
}

TEST(RunMethod, TransferDesignersOnSimilarSources) {
  const SearchSpace& space = line_space();
  const CandidatePool pool = line_pool(120);
  auto sources = std::make_shared<std::vector<SourceTask>>();
  for (int i = 0; i < 3; ++i) {
    TaskHistory h;
    Rng rng(static_cast<std::uint64_t>(50 + i));
    for (auto idx : initial_design(pool.size(), 40, rng)) {
      h.add(pool.configs[idx], wiggle(pool.configs[idx]) + 0.01 * i);
    }
    GpOptions o;
    o.seed = static_cast<std::uint64_t>(i);
    sources->push_back(SourceTask::build("s" + std::to_string(i), space, std::move(h), o));
  }
  for (const char* token : {"ours-gp", "ours-rs", "box-gp", "ellipsoid-rs",
                            "ours-v1-gp", "ours-v2-gp"}) {
    RunSpec spec = line_spec(pool, 12, 21);
    const auto r = run_method(spec, parse_method(token), sources);
    check_contract(r, 12);
    for (auto s : r.designed_space_sizes) EXPECT_LE(s, pool.size());
  }
}
