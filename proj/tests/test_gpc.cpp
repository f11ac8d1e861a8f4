#include <gtest/gtest.h>

#include <cmath>

#include "spacetx/error.hpp"
#include "spacetx/gpc.hpp"
#include "spacetx/random.hpp"

using namespace spacetx;

namespace {

double accuracy(const GpcModel& m, const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  const auto pred = m.predict_labels(x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += pred[i] == labels[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

}  // namespace

TEST(RegionLabels, QuantileExamples) {
  const std::vector<double> y = {0.1, 0.2, 0.3, 0.4};
  const auto half = make_region_labels(y, 0.5);
  EXPECT_NEAR(half.threshold_y, 0.25, 1e-12);
  EXPECT_EQ(half.labels, (std::vector<int>{1, 1, 0, 0}));
  EXPECT_FALSE(half.clamped);

  const auto high = make_region_labels(y, 0.95);
  EXPECT_NEAR(high.threshold_y, 0.385, 1e-12);
  EXPECT_EQ(high.labels, (std::vector<int>{1, 1, 1, 0}));
  EXPECT_FALSE(high.clamped);
}

TEST(RegionLabels, ClampsTies) {
  const std::vector<double> y = {0.5, 0.5};
  const auto l = make_region_labels(y, 0.5);
  EXPECT_TRUE(l.clamped);
  EXPECT_EQ(l.labels, (std::vector<int>{1, 0}));
  const std::vector<double> z = {0.3, 0.1, 0.9, 0.1};
  const auto low = make_region_labels(z, 0.0);
  EXPECT_TRUE(low.clamped);
  EXPECT_EQ(low.labels, (std::vector<int>{0, 1, 0, 0}));
  EXPECT_THROW(make_region_labels(std::vector<double>{1.0}, 0.5), Error);
}

TEST(RegionLabels, MonotoneInAlphaAndFractionTracksAlpha) {
  Rng rng(3);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<double> y(40 + uniform_index(rng, 60));
    for (auto& v : y) v = standard_normal(rng);
    std::vector<int> prev;
    for (double a = 0.05; a <= 0.951; a += 0.05) {
      const auto l = make_region_labels(y, a);
      if (!prev.empty() && !l.clamped) {
        for (std::size_t i = 0; i < y.size(); ++i) EXPECT_GE(l.labels[i], prev[i]);
      }
      std::size_t ones = 0;
      for (int b : l.labels) ones += static_cast<std::size_t>(b);
      EXPECT_LE(std::abs(static_cast<double>(ones) / y.size() - a), 2.0 / y.size());
      if (!l.clamped) prev = l.labels;
    }
  }
}

TEST(Gpc, SeparatedClusters) {
  Rng rng(1);
  Eigen::MatrixXd x(60, 2);
  std::vector<int> labels(60);
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double c = i < 30 ? 0.0 : 5.0;
    x(i, 0) = c + 0.3 * standard_normal(rng);
    x(i, 1) = c + 0.3 * standard_normal(rng);
    labels[static_cast<std::size_t>(i)] = i < 30 ? 1 : 0;
  }
  GpOptions o;
  o.fixed_kernel = KernelParams{Eigen::Vector2d(1.0, 1.0), 4.0};
  const GpcModel m = GpcModel::fit(x, labels, o);
  EXPECT_TRUE(m.converged());
  EXPECT_GE(accuracy(m, x, labels), 0.95);
  const GpcModel searched = GpcModel::fit(x, labels, GpOptions{});
  EXPECT_GE(accuracy(searched, x, labels), 0.95);
}

TEST(Gpc, XorPattern) {
  Rng rng(2);
  Eigen::MatrixXd x(80, 2);
  std::vector<int> labels(80);
  for (Eigen::Index i = 0; i < 80; ++i) {
    const int q = static_cast<int>(i % 4);
    const double cx = (q & 1) ? 0.75 : 0.25, cy = (q & 2) ? 0.75 : 0.25;
    x(i, 0) = cx + 0.05 * standard_normal(rng);
    x(i, 1) = cy + 0.05 * standard_normal(rng);
    labels[static_cast<std::size_t>(i)] = ((q & 1) ^ ((q >> 1) & 1));
  }
  GpOptions o;
  o.seed = 7;
  const GpcModel m = GpcModel::fit(x, labels, o);
  EXPECT_GE(accuracy(m, x, labels), 0.9);
}

TEST(Gpc, SingleClassThrows) {
  Eigen::MatrixXd x(3, 1);
  x << 0.1, 0.2, 0.3;
  EXPECT_THROW(GpcModel::fit(x, std::vector<int>{1, 1, 1}, GpOptions{}), Error);
}

TEST(Gpc, SymmetricTwoPointAndPriorReversion) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const std::vector<int> labels = {1, 0};
  const KernelParams p{Eigen::VectorXd::Constant(1, 0.5), 2.0};
  const GpcModel m = GpcModel::with_hyperparams(x, labels, p);
  EXPECT_NEAR(m.predict_proba(Eigen::VectorXd::Constant(1, 0.5)), 0.5, 0.05);
  EXPECT_GT(m.predict_proba(Eigen::VectorXd::Constant(1, 0.0)), 0.5);
  EXPECT_NEAR(m.predict_proba(Eigen::VectorXd::Constant(1, 20 * 0.5 + 1.0)), 0.5, 0.1);
  EXPECT_THROW(m.predict_proba(Eigen::VectorXd::Zero(2)), Error);
}

TEST(Gpc, LabelIsInclusiveThresholdOfProbability) {
  Rng rng(4);
  Eigen::MatrixXd x(30, 2);
  std::vector<int> labels(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    x.row(i) << uniform01(rng), uniform01(rng);
    labels[static_cast<std::size_t>(i)] = x(i, 0) + x(i, 1) < 1.0;
  }
  const GpcModel m = GpcModel::fit(x, labels, GpOptions{});
  Eigen::MatrixXd q(400, 2);
  for (Eigen::Index i = 0; i < 400; ++i) q.row(i) << uniform01(rng), uniform01(rng);
  const auto batch = m.predict_labels(q);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double p = m.predict_proba(q.row(i).transpose());
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    const int label = m.predict_label(q.row(i).transpose());
    EXPECT_EQ(label, p >= 0.5 ? 1 : 0);
    EXPECT_EQ(batch[static_cast<std::size_t>(i)], label);
  }
}

TEST(Gpc, LaplaceGradientMatchesFiniteDifferences) {
  Rng rng(5);
  Eigen::MatrixXd x(25, 2);
  std::vector<int> labels(25);
  for (Eigen::Index i = 0; i < 25; ++i) {
    x.row(i) << uniform01(rng), uniform01(rng);
    labels[static_cast<std::size_t>(i)] = std::sin(5 * x(i, 0)) > x(i, 1);
  }
  const KernelParams p{Eigen::Vector2d(0.3, 0.7), 3.0};
  const auto g = laplace_lml_with_gradient(x, labels, p);
  ASSERT_EQ(g.gradient.size(), 3);
  const double eps = 1e-5;
  for (int d = 0; d < 3; ++d) {
    auto at = [&](double s) {
      KernelParams q = p;
      if (d < 2) q.lengthscales(d) *= std::exp(s);
      else q.signal_variance *= std::exp(s);
      return laplace_lml_with_gradient(x, labels, q).value;
    };
    EXPECT_NEAR(g.gradient(d), (at(eps) - at(-eps)) / (2 * eps), 1e-4) << "coordinate " << d;
  }
  const GpcModel m = GpcModel::with_hyperparams(x, labels, p);
  EXPECT_NEAR(m.log_marginal_likelihood(), g.value, 1e-6);
}
