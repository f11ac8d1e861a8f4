#include "spacetx/optimize.hpp"

#include <cmath>
#include <limits>

namespace spacetx {
namespace {

ObjectiveValue safe_eval(const SmoothObjective& objective,
                         const Eigen::VectorXd& x) {
  ObjectiveValue v;
  try {
    v = objective(x);
  } catch (const std::exception&) {
    v.value = -std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(v.value) || v.gradient.size() != x.size() ||
      !v.gradient.allFinite()) {
    v.value = -std::numeric_limits<double>::infinity();
    v.gradient = Eigen::VectorXd::Zero(x.size());
  }
  return v;
}

}  // namespace

MaximizeResult maximize_bounded(const SmoothObjective& objective,
                                Eigen::VectorXd start,
                                const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, int max_iters) {
  const Eigen::Index n = start.size();
  Eigen::VectorXd x = start.cwiseMax(lower).cwiseMin(upper);
  ObjectiveValue cur = safe_eval(objective, x);
  MaximizeResult result{x, cur.value, 0};
  if (!std::isfinite(cur.value)) return result;

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool fresh_hessian = true;
  for (int iter = 0; iter < max_iters; ++iter) {
    result.iterations = iter + 1;
    // Variables pinned at a bound with the gradient pointing outward are
    // frozen for this step.
    Eigen::VectorXd free = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if ((x[i] <= lower[i] && cur.gradient[i] < 0.0) ||
          (x[i] >= upper[i] && cur.gradient[i] > 0.0)) {
        free[i] = 0.0;
      }
    }
    const Eigen::VectorXd g_free = cur.gradient.cwiseProduct(free);
    if (g_free.lpNorm<Eigen::Infinity>() < 1e-6) break;

    Eigen::VectorXd direction = (inv_hessian * g_free).cwiseProduct(free);
    if (direction.dot(g_free) <= 0.0) {
      direction = g_free;
      inv_hessian.setIdentity();
      fresh_hessian = true;
    }
    // Cap the first steps so a unit-Hessian guess cannot jump across the box.
    const double max_step = direction.lpNorm<Eigen::Infinity>();
    double t = max_step > 1.0 ? 1.0 / max_step : 1.0;

    bool accepted = false;
    Eigen::VectorXd x_new;
    ObjectiveValue next;
    for (int ls = 0; ls < 30; ++ls) {
      x_new = (x + t * direction).cwiseMax(lower).cwiseMin(upper);
      next = safe_eval(objective, x_new);
      if (std::isfinite(next.value) &&
          next.value >= cur.value + 1e-4 * cur.gradient.dot(x_new - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (fresh_hessian) break;
      inv_hessian.setIdentity();
      fresh_hessian = true;
      continue;
    }

    const Eigen::VectorXd s = x_new - x;
    // BFGS on the negated objective.
    const Eigen::VectorXd y = -(next.gradient - cur.gradient);
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      if (fresh_hessian) inv_hessian = (sy / y.squaredNorm()) * eye;
      inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian *
                        (eye - rho * y * s.transpose()) +
                    rho * s * s.transpose();
      fresh_hessian = false;
    }
    const double improvement = next.value - cur.value;
    x = x_new;
    cur = std::move(next);
    if (improvement < 1e-10 * (1.0 + std::fabs(cur.value))) break;
  }
  result.x = x;
  result.value = cur.value;
  return result;
}

}  // namespace spacetx
