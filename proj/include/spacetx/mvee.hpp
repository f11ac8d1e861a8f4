#pragma once

#include <Eigen/Core>

namespace spacetx {

// {x : (x - center)^T shape (x - center) <= 1}
struct Ellipsoid {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;

  double radius_sq(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd d = x - center;
    return d.dot(shape * d);
  }
};

// Khachiyan's algorithm for the minimum-volume enclosing ellipsoid of the
// rows of `points`. Every input point satisfies radius_sq <= 1 + tolerance.
// Affinely dependent point sets get 1e-6 added to the covariance diagonal.
// Throws on fewer than two points or tolerance <= 0.
Ellipsoid mvee(const Eigen::MatrixXd& points, double tolerance,
               int max_iters = 100000);

}  // namespace spacetx
