#include "spacetx/mvee.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "spacetx/error.hpp"

namespace spacetx {

Ellipsoid mvee(const Eigen::MatrixXd& points, double tolerance, int max_iters) {
  if (points.rows() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "mvee: need at least 2 points");
  }
  if (!(tolerance > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "mvee: tolerance must be positive");
  }
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  // Lifted points as columns: q_i = (p_i, 1).
  Eigen::MatrixXd q(d + 1, n);
  q.topRows(d) = points.transpose();
  q.row(d).setOnes();

  constexpr double kRegularization = 1e-6;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  const double dim = static_cast<double>(d);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd x = q * u.asDiagonal() * q.transpose();
    Eigen::LLT<Eigen::MatrixXd> chol(x);
    if (chol.info() != Eigen::Success) {
      x.diagonal().array() += kRegularization;
      chol.compute(x);
    }
    const Eigen::MatrixXd solved = chol.solve(q);
    const Eigen::VectorXd m = q.cwiseProduct(solved).colwise().sum().transpose();
    Eigen::Index j = 0;
    const double m_max = m.maxCoeff(&j);
    if (m_max <= (1.0 + tolerance) * (dim + 1.0)) break;
    const double step = (m_max - dim - 1.0) / ((dim + 1.0) * (m_max - 1.0));
    u *= (1.0 - step);
    u[j] += step;
  }

  Ellipsoid e;
  e.center = points.transpose() * u;
  Eigen::MatrixXd cov = points.transpose() * u.asDiagonal() * points -
                        e.center * e.center.transpose();
  Eigen::LLT<Eigen::MatrixXd> chol(cov);
  if (chol.info() != Eigen::Success ||
      chol.matrixLLT().diagonal().minCoeff() < 1e-9) {
    cov.diagonal().array() += kRegularization;
  }
  e.shape = cov.inverse() / dim;
  // Khachiyan's stopping rule bounds the radius by (1 + tol)(d + 1) / (d + 1)
  // in the lifted space; the projected ellipsoid can still leave points a
  // hair outside. Rescale so containment holds exactly.
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    worst = std::max(worst, e.radius_sq(points.row(i).transpose()));
  }
  if (worst > 1.0) e.shape /= worst;
  return e;
}

}  // namespace spacetx
