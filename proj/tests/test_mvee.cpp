#include <gtest/gtest.h>

#include <cmath>

#include "spacetx/error.hpp"
#include "spacetx/mvee.hpp"
#include "spacetx/random.hpp"

using namespace spacetx;

TEST(Mvee, UnitSquareCorners) {
  Eigen::MatrixXd c(4, 2);
  c << 0, 0, 1, 0, 0, 1, 1, 1;
  const Ellipsoid e = mvee(c, 1e-7);
  EXPECT_LT((e.center - Eigen::Vector2d(0.5, 0.5)).norm(), 1e-3);
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::sqrt(e.radius_sq(c.row(i).transpose())), 1.0, 1e-3);
  }
  // The circumscribed circle of the square: radius sqrt(2)/2.
  EXPECT_NEAR(e.shape(0, 0), 2.0, 1e-3);
  EXPECT_NEAR(e.shape(0, 1), 0.0, 1e-3);
}

TEST(Mvee, ContainsRandomPoints) {
  Rng rng(8);
  for (int inst = 0; inst < 10; ++inst) {
    Eigen::MatrixXd p(50, 3);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = standard_normal(rng);
    const Ellipsoid e = mvee(p, 1e-7);
    for (Eigen::Index i = 0; i < 50; ++i) {
      EXPECT_LE(e.radius_sq(p.row(i).transpose()), 1.0 + 1e-6);
    }
  }
}

TEST(Mvee, DegenerateInputs) {
  Eigen::MatrixXd line(3, 2);
  line << 0, 0, 0.5, 0.5, 1, 1;
  const Ellipsoid e = mvee(line, 1e-6);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LE(e.radius_sq(line.row(i).transpose()), 1.0 + 1e-6);
  EXPECT_TRUE(e.shape.allFinite());
  EXPECT_THROW(mvee(Eigen::MatrixXd::Zero(1, 2), 1e-6), Error);
  EXPECT_THROW(mvee(line, 0.0), Error);
}
