#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "spacetx/error.hpp"
#include "spacetx/transfer.hpp"

using namespace spacetx;

namespace {

SearchSpace unit_square() {
  return SearchSpace({continuous_param("a", 0, 1, 0.5), continuous_param("b", 0, 1, 0.5)});
}

Configuration point(double a, double b) { return Configuration{{a, b}}; }

double bowl(double a, double b, double ca = 0.3, double cb = 0.6) {
  return (a - ca) * (a - ca) + (b - cb) * (b - cb);
}

SourceTask make_source(const std::string& id, std::size_t n, std::uint64_t seed, double sign,
                       bool fit = true) {
  const SearchSpace space = unit_square();
  Rng rng(seed);
  TaskHistory h;
  for (const auto& c : sample_uniform(space, n, rng)) {
    h.add(c, sign * bowl(std::get<double>(c.values[0]), std::get<double>(c.values[1])));
  }
  GpOptions o;
  o.seed = seed;
  return SourceTask::build(id, space, std::move(h), o, fit);
}

struct Target {
  Eigen::MatrixXd points;
  std::vector<double> ys;
};

Target target_observations(std::size_t n, std::uint64_t seed) {
  const SearchSpace space = unit_square();
  Rng rng(seed);
  const auto configs = sample_uniform(space, n, rng);
  Target t{encode_all(space, configs), {}};
  for (const auto& c : configs) {
    t.ys.push_back(bowl(std::get<double>(c.values[0]), std::get<double>(c.values[1]), 0.32, 0.58));
  }
  return t;
}

Eigen::MatrixXd uniform_candidates(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return encode_all(unit_square(), sample_uniform(unit_square(), n, rng));
}

class FixedVote final : public RegionClassifier {
 public:
  explicit FixedVote(int v) : v_(v) {}
  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return v_ ? 0.9 : 0.1;
  }
  int predict_label(const Eigen::Ref<const Eigen::VectorXd>&) const override { return v_; }

 private:
  int v_;
};

std::vector<PromisingRegion> regions_from_votes(const std::vector<int>& votes) {
  std::vector<PromisingRegion> out(votes.size());
  for (std::size_t i = 0; i < votes.size(); ++i) {
    out[i].classifier = std::make_shared<FixedVote>(votes[i]);
  }
  return out;
}

}  // namespace

TEST(Similarity, PairCountExamples) {
  const std::vector<double> y = {0.1, 0.3, 0.2};
  EXPECT_EQ(order_preserving_count(std::vector<double>{1, 3, 2}, y), 3u);
  EXPECT_EQ(order_preserving_count(std::vector<double>{3, 1, 2}, y), 0u);
  EXPECT_EQ(order_preserving_count(std::vector<double>{2, 1, 3}, y), 1u);
  EXPECT_DOUBLE_EQ(task_similarity(std::vector<double>{1, 3, 2}, y), 1.0);
  EXPECT_DOUBLE_EQ(task_similarity(std::vector<double>{2, 1, 3}, y), 1.0 / 3.0);
  EXPECT_EQ(task_similarity(std::vector<double>{1.0}, std::vector<double>{2.0}), 0.5);
  EXPECT_EQ(task_similarity(std::vector<double>{}, std::vector<double>{}), 0.5);
  // Tied on both sides counts as preserved.
  EXPECT_EQ(order_preserving_count(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 1u);
}

TEST(Similarity, NegatedSurrogateIsComplementary) {
  Rng rng(12);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 2 + uniform_index(rng, 24);
    std::vector<double> p(n), neg(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = standard_normal(rng);
      neg[i] = -p[i];
      y[i] = standard_normal(rng);
    }
    EXPECT_NEAR(task_similarity(p, y) + task_similarity(neg, y), 1.0, 1e-12);
  }
}

TEST(AdaptiveQuantile, ExamplesAndShape) {
  const DesignConfig cfg;
  EXPECT_NEAR(adaptive_quantile(1.0, cfg), 0.05, 1e-12);
  EXPECT_NEAR(adaptive_quantile(0.5, cfg), 0.95, 1e-12);
  EXPECT_NEAR(adaptive_quantile(0.2, cfg), 0.95, 1e-12);
  EXPECT_NEAR(adaptive_quantile(0.75, cfg), 0.50, 1e-12);
  EXPECT_NEAR(adaptive_quantile(0.95, cfg), 0.14, 1e-12);
  double last = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double a = adaptive_quantile(i / 100.0, cfg);
    EXPECT_LE(a, last + 1e-15);
    last = a;
  }
}

TEST(DesignConfig, Validation) {
  DesignConfig c;
  c.alpha_min = 0.9;
  c.alpha_max = 0.1;
  EXPECT_THROW(validate_design_config(c), Error);
  c = DesignConfig{};
  c.k = 0;
  EXPECT_THROW(validate_design_config(c), Error);
}

TEST(Voting, ThresholdAndExamples) {
  EXPECT_EQ(vote_threshold(1), 1u);
  EXPECT_EQ(vote_threshold(5), 2u);
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  EXPECT_EQ(vote_membership(regions_from_votes({1, 1, 0, 0, 0}), x), 1);
  EXPECT_EQ(vote_membership(regions_from_votes({0, 0, 1, 0, 0}), x), 0);
  EXPECT_EQ(vote_membership(regions_from_votes({0}), x), 0);
}

TEST(Voting, MonotoneUnderSingleFlips) {
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  for (std::size_t k = 1; k <= 7; ++k) {
    for (std::size_t mask = 0; mask < (1u << k); ++mask) {
      std::vector<int> votes(k);
      for (std::size_t i = 0; i < k; ++i) votes[i] = (mask >> i) & 1u;
      const int base = vote_membership(regions_from_votes(votes), x);
      for (std::size_t i = 0; i < k; ++i) {
        if (votes[i]) continue;
        auto up = votes;
        up[i] = 1;
        EXPECT_GE(vote_membership(regions_from_votes(up), x), base);
      }
    }
  }
}

TEST(Sampling, Examples) {
  Rng rng(1);
  auto all = sample_source_tasks(std::vector<double>{0.2, 0.9, 0.5, 0.1, 0.7}, 5, rng);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2, 3, 4}));

  std::size_t zero_first = 0, hits = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    Rng r(s);
    zero_first += sample_source_tasks(std::vector<double>{1, 0, 0}, 1, r)[0] == 0;
    hits += sample_source_tasks(std::vector<double>{0.8, 0.2}, 1, r)[0] == 0;
  }
  EXPECT_EQ(zero_first, 10000u);
  EXPECT_NEAR(hits / 10000.0, 0.80, 0.02);

  Rng r(3);
  auto uniform = sample_source_tasks(std::vector<double>{0, 0, 0}, 2, r);
  EXPECT_EQ(uniform.size(), 2u);
  EXPECT_NE(uniform[0], uniform[1]);
  EXPECT_EQ(sample_source_tasks(std::vector<double>{0.5, 0.5}, 7, r).size(), 2u);

  Rng a(9), b(9);
  EXPECT_EQ(sample_source_tasks(std::vector<double>{.3, .1, .6, .2}, 3, a),
            sample_source_tasks(std::vector<double>{.3, .1, .6, .2}, 3, b));
}

TEST(Region, NeutralStartIsMaximallyConservative) {
  const SourceTask src = make_source("s", 60, 1, 1.0);
  ClassifierCache cache;
  const Eigen::MatrixXd none(0, 2);
  const auto r = extract_promising_region(src, none, {}, DesignConfig{}, cache);
  EXPECT_EQ(r.similarity, 0.5);
  EXPECT_EQ(r.alpha_used, 0.95);
  EXPECT_GE(r.positive_fraction, 0.95 - 2.0 / 60);
}

TEST(Region, DissimilarSourceCoversMostOfTheSpace) {
  const SourceTask src = make_source("neg", 80, 2, -1.0);
  const Target t = target_observations(12, 5);
  ClassifierCache cache;
  const auto r = extract_promising_region(src, t.points, t.ys, DesignConfig{}, cache);
  ASSERT_LE(r.similarity, 0.5);
  EXPECT_EQ(r.alpha_used, 0.95);
  const auto labels = r.classifier->predict_labels(uniform_candidates(1000, 3));
  double ones = 0;
  for (int l : labels) ones += l;
  EXPECT_GE(ones / 1000.0, 0.80);
}

TEST(Region, SimilarSourceShrinksAndCaches) {
  const SourceTask src = make_source("pos", 80, 3, 1.0);
  const Target t = target_observations(12, 6);
  ClassifierCache cache;
  const auto r = extract_promising_region(src, t.points, t.ys, DesignConfig{}, cache);
  EXPECT_GT(r.similarity, 0.9);
  EXPECT_NEAR(r.alpha_used, adaptive_quantile(r.similarity, DesignConfig{}), 1e-15);
  EXPECT_NEAR(r.positive_fraction, r.alpha_used, 2.0 / 80);
  const std::size_t fits = cache.fits();
  const auto again = extract_promising_region(src, t.points, t.ys, DesignConfig{}, cache);
  EXPECT_EQ(cache.fits(), fits);
  EXPECT_EQ(again.classifier.get(), r.classifier.get());
}

TEST(DesignSpace, MembersAreASubsetAndFallbackCoversPool) {
  std::vector<SourceTask> sources;
  for (std::uint64_t s = 0; s < 4; ++s) sources.push_back(make_source("s" + std::to_string(s), 50, 10 + s, 1.0));
  const Target t = target_observations(10, 7);
  const Eigen::MatrixXd cand = uniform_candidates(400, 8);
  ClassifierCache cache;
  Rng rng(1);
  DesignConfig cfg;
  const DesignedSpace d = design_space(sources, t.points, t.ys, cand, cfg, rng, cache);
  EXPECT_EQ(d.regions.size(), 4u);
  EXPECT_EQ(d.sampled.size(), 4u);
  EXPECT_TRUE(std::is_sorted(d.members.begin(), d.members.end()));
  for (auto m : d.members) EXPECT_LT(m, 400u);
  EXPECT_LT(d.members.size(), 400u);

  cfg.min_space_size = 401;
  const DesignedSpace f = design_space(sources, t.points, t.ys, cand, cfg, rng, cache);
  EXPECT_TRUE(f.fallback_used);
  EXPECT_EQ(f.members.size(), 400u);
}

TEST(DesignSpace, AdversarialSourcesKeepMostCandidates) {
  std::vector<SourceTask> sources;
  for (std::uint64_t s = 0; s < 5; ++s) sources.push_back(make_source("n" + std::to_string(s), 50, 20 + s, -1.0));
  const Target t = target_observations(15, 9);
  const Eigen::MatrixXd cand = uniform_candidates(500, 10);
  ClassifierCache cache;
  Rng rng(2);
  const DesignedSpace d = design_space(sources, t.points, t.ys, cand, DesignConfig{}, rng, cache);
  for (const auto& r : d.regions) {
    if (r.similarity <= 0.5) EXPECT_EQ(r.alpha_used, 0.95);
  }
  EXPECT_GE(d.members.size(), 250u);
}

TEST(DesignSpace, CostGrowsAtMostLinearlyInSourceCount) {
  std::vector<SourceTask> pool;
  for (std::uint64_t s = 0; s < 80; ++s) pool.push_back(make_source("t" + std::to_string(s), 25, 100 + s, 1.0));
  const Target t = target_observations(10, 11);
  const Eigen::MatrixXd cand = uniform_candidates(300, 12);
  auto timed = [&](std::size_t k_sources) {
    std::span<const SourceTask> view(pool.data(), k_sources);
    ClassifierCache cache;
    Rng rng(3);
    const auto t0 = std::chrono::steady_clock::now();
    design_space(view, t.points, t.ys, cand, DesignConfig{}, rng, cache);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double t5 = timed(5), t20 = timed(20), t80 = timed(80);
  EXPECT_LT(t80, 2.0 * 16.0 * t5 + 0.05);
  EXPECT_LT(t20, 2.0 * 4.0 * t5 + 0.05);
}

TEST(Box, Examples) {
  const SearchSpace space = unit_square();
  auto single = [&](const std::string& id, double a, double b) {
    TaskHistory h;
    h.add(point(a, b), 0.0);
    h.add(point(0.9, 0.9), 1.0);
    return SourceTask::build(id, space, std::move(h), GpOptions{}, false);
  };
  std::vector<SourceTask> two = {single("p", 0.2, 0.3), single("q", 0.6, 0.1)};
  const BoxRegion box = box_design(two, space);
  EXPECT_FALSE(box.full_space);
  EXPECT_NEAR(box.lower(0), 0.2, 1e-12);
  EXPECT_NEAR(box.upper(0), 0.6, 1e-12);
  EXPECT_NEAR(box.lower(1), 0.1, 1e-12);
  EXPECT_NEAR(box.upper(1), 0.3, 1e-12);
  for (const auto& s : two) EXPECT_TRUE(box.contains(s.encoded.row(static_cast<Eigen::Index>(s.incumbent_index())).transpose()));

  std::vector<SourceTask> one = {single("p", 0.2, 0.3)};
  const BoxRegion tiny = box_design(one, space);
  EXPECT_NEAR(tiny.upper(0) - tiny.lower(0), 0.01, 1e-12);
  EXPECT_TRUE(tiny.contains(Eigen::Vector2d(0.2, 0.3)));
  EXPECT_FALSE(tiny.contains(Eigen::Vector2d(0.25, 0.3)));

  const SearchSpace mixed({continuous_param("a", 0, 1, 0.5), categorical_param("c", {"x", "y"}, "x")});
  TaskHistory h;
  h.add(Configuration{{0.5, std::string("x")}}, 0.0);
  h.add(Configuration{{0.1, std::string("y")}}, 1.0);
  std::vector<SourceTask> cat = {SourceTask::build("c", mixed, h, GpOptions{}, false)};
  EXPECT_TRUE(box_design(cat, mixed).full_space);
  EXPECT_TRUE(ellipsoid_design(cat, mixed).full_space);
}

TEST(Ellipsoid, Examples) {
  const SearchSpace space = unit_square();
  std::vector<SourceTask> corners;
  const double xs[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    TaskHistory h;
    h.add(point(xs[i][0], xs[i][1]), 0.0);
    h.add(point(0.5, 0.5), 1.0);
    corners.push_back(SourceTask::build("c" + std::to_string(i), space, h, GpOptions{}, false));
  }
  const EllipsoidRegion e = ellipsoid_design(corners, space);
  EXPECT_FALSE(e.full_space);
  EXPECT_TRUE(e.contains(Eigen::Vector2d(0.5, 0.5)));
  EXPECT_FALSE(e.contains(Eigen::Vector2d(2, 2)));
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(e.contains(Eigen::Vector2d(xs[i][0], xs[i][1])));

  std::vector<SourceTask> one(corners.begin(), corners.begin() + 1);
  const EllipsoidRegion ball = ellipsoid_design(one, space);
  EXPECT_TRUE(ball.contains(Eigen::Vector2d(0.005, 0.0)));
  EXPECT_FALSE(ball.contains(Eigen::Vector2d(0.02, 0.0)));
}
