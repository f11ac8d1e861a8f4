#pragma once

#include <functional>

#include <Eigen/Core>

namespace spacetx {

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

using SmoothObjective = std::function<ObjectiveValue(const Eigen::VectorXd&)>;

struct MaximizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

// Box-constrained quasi-Newton ascent: BFGS on the free variables, projected
// steps, Armijo backtracking. Non-finite objective values count as -inf.
MaximizeResult maximize_bounded(const SmoothObjective& objective,
                                Eigen::VectorXd start,
                                const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, int max_iters);

}  // namespace spacetx
