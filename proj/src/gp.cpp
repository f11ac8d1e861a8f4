#include "spacetx/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "spacetx/error.hpp"
#include "spacetx/optimize.hpp"
#include "spacetx/random.hpp"

namespace spacetx {
namespace {

constexpr double kSqrt5 = 2.23606797749978969640;
constexpr double kMinLogLengthscale = -4.605170185988091;  // log 0.01
constexpr double kMaxLogLengthscale = 4.605170185988091;   // log 100
constexpr double kMinLogSignal = -4.605170185988091;
constexpr double kMaxLogSignal = 4.605170185988091;
constexpr double kMaxLogNoise = 2.302585092994046;  // log 10

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b,
                                  const Eigen::VectorXd& lengthscales) {
  const Eigen::VectorXd inv = lengthscales.cwiseInverse();
  const Eigen::MatrixXd as = a * inv.asDiagonal();
  const Eigen::MatrixXd bs = b * inv.asDiagonal();
  Eigen::MatrixXd d2 = (-2.0 * as * bs.transpose()).eval();
  d2.colwise() += as.rowwise().squaredNorm();
  d2.rowwise() += bs.rowwise().squaredNorm().transpose();
  return d2.cwiseMax(0.0);
}

double kernel_from_r2(KernelKind kind, double signal, double r2) {
  if (kind == KernelKind::kSquaredExponentialArd) {
    return signal * std::exp(-0.5 * r2);
  }
  const double r = std::sqrt(r2);
  return signal * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
}

}  // namespace

double kernel_value(KernelKind kind, const KernelParams& params,
                    const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double r2 =
      (a - b).cwiseQuotient(params.lengthscales).squaredNorm();
  return kernel_from_r2(kind, params.signal_variance, r2);
}

Eigen::MatrixXd kernel_matrix(KernelKind kind, const KernelParams& params,
                              const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k = squared_distances(a, b, params.lengthscales);
  const double s = params.signal_variance;
  if (kind == KernelKind::kSquaredExponentialArd) {
    return (s * (-0.5 * k.array()).exp()).matrix();
  }
  const Eigen::ArrayXXd r = k.array().sqrt();
  return (s * (1.0 + kSqrt5 * r + (5.0 / 3.0) * k.array()) *
          (-kSqrt5 * r).exp())
      .matrix();
}

std::vector<Eigen::MatrixXd> kernel_gradients(KernelKind kind,
                                              const KernelParams& params,
                                              const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::MatrixXd r2 = squared_distances(x, x, params.lengthscales);
  const double s = params.signal_variance;
  Eigen::ArrayXXd common;
  Eigen::MatrixXd gram;
  if (kind == KernelKind::kSquaredExponentialArd) {
    gram = (s * (-0.5 * r2.array()).exp()).matrix();
    common = gram.array();
  } else {
    const Eigen::ArrayXXd r = r2.array().sqrt();
    const Eigen::ArrayXXd e = (-kSqrt5 * r).exp();
    gram = (s * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) * e).matrix();
    common = s * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
  }
  std::vector<Eigen::MatrixXd> grads;
  grads.reserve(static_cast<std::size_t>(d + 1));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd col = x.col(j) / params.lengthscales[j];
    Eigen::ArrayXXd diff2(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      diff2.col(c) = (col.array() - col[c]).square();
    }
    grads.emplace_back((common * diff2).matrix());
  }
  grads.push_back(std::move(gram));
  return grads;
}

void validate_options(const GpOptions& opts) {
  if (!(opts.noise_floor >= 1e-10)) {
    throw Error(ErrorKind::kInvalidArgument, "GpOptions: noise_floor < 1e-10");
  }
  if (opts.restarts < 1) {
    throw Error(ErrorKind::kInvalidArgument, "GpOptions: restarts < 1");
  }
}

Standardized standardize(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "standardize: empty input");
  }
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::Map<const Eigen::VectorXd> v(values.data(), n);
  Standardized out;
  out.mean = v.mean();
  const double var = (v.array() - out.mean).square().mean();
  const double sd = std::sqrt(var);
  if (sd < 1e-12) {
    out.std = 1.0;
    out.values = Eigen::VectorXd::Zero(n);
  } else {
    out.std = sd;
    out.values = (v.array() - out.mean) / sd;
  }
  return out;
}

namespace {

// Factorizes K + (noise + jitter) I, escalating jitter 1e-10 .. 1e-4.
bool factorize(const Eigen::MatrixXd& gram, double noise,
               Eigen::LLT<Eigen::MatrixXd>& chol, double& jitter) {
  const Eigen::Index n = gram.rows();
  Eigen::MatrixXd k = gram;
  k.diagonal().array() += noise;
  chol.compute(k);
  jitter = 0.0;
  if (chol.info() == Eigen::Success) return true;
  for (double j = 1e-10; j <= 1e-4 * 1.0001; j *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += j;
    chol.compute(kj);
    if (chol.info() == Eigen::Success) {
      jitter = j;
      return true;
    }
  }
  (void)n;
  return false;
}

double lml_from_factor(const Eigen::LLT<Eigen::MatrixXd>& chol,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& alpha) {
  const Eigen::MatrixXd& l = chol.matrixLLT();
  const double log_det = l.diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - log_det -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

struct LogParamLayout {
  Eigen::Index dim;
  bool search_noise;

  Eigen::Index size() const { return dim + 1 + (search_noise ? 1 : 0); }

  GpHyperparams unpack(const Eigen::VectorXd& theta, double fixed_noise) const {
    GpHyperparams h;
    h.kernel.lengthscales = theta.head(dim).array().exp();
    h.kernel.signal_variance = std::exp(theta[dim]);
    h.noise_variance = search_noise ? std::exp(theta[dim + 1]) : fixed_noise;
    return h;
  }
};

}  // namespace

double log_marginal_likelihood(const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& targets,
                               const GpHyperparams& hyper, KernelKind kind) {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double jitter = 0.0;
  if (!factorize(kernel_matrix(kind, hyper.kernel, points, points),
                 hyper.noise_variance, chol, jitter)) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd alpha = chol.solve(targets);
  return lml_from_factor(chol, targets, alpha);
}

namespace {

ObjectiveValue lml_and_gradient(const Eigen::MatrixXd& points, const Eigen::VectorXd& y,
                                const GpHyperparams& h, KernelKind kind) {
  const Eigen::Index d = points.cols();
  auto grads = kernel_gradients(kind, h.kernel, points);
  Eigen::LLT<Eigen::MatrixXd> chol;
  double jitter = 0.0;
  ObjectiveValue out;
  out.gradient = Eigen::VectorXd::Zero(d + 2);
  if (!factorize(grads.back(), h.noise_variance, chol, jitter)) {
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::VectorXd alpha = chol.solve(y);
  out.value = lml_from_factor(chol, y, alpha);
  const Eigen::Index n = y.size();
  const Eigen::MatrixXd k_inv = chol.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd inner = alpha * alpha.transpose() - k_inv;
  for (Eigen::Index j = 0; j <= d; ++j) {
    out.gradient[j] = 0.5 * inner.cwiseProduct(grads[static_cast<std::size_t>(j)]).sum();
  }
  out.gradient[d + 1] = 0.5 * h.noise_variance * inner.trace();
  return out;
}

}  // namespace

ObjectiveValue log_marginal_likelihood_with_gradient(const Eigen::MatrixXd& points,
                                                     const Eigen::VectorXd& targets,
                                                     const GpHyperparams& hyper,
                                                     KernelKind kind) {
  if (points.rows() != targets.size() || points.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "log_marginal_likelihood: need matching non-empty points and targets");
  }
  return lml_and_gradient(points, targets, hyper, kind);
}

GpModel GpModel::fit(const Eigen::MatrixXd& points,
                     std::span<const double> targets, const GpOptions& opts) {
  validate_options(opts);
  if (points.rows() == 0 ||
      static_cast<std::size_t>(points.rows()) != targets.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "fit_gp: need matching non-empty points and targets");
  }
  GpModel model;
  model.points_ = points;
  model.kind_ = opts.kernel;
  const Standardized st = standardize(targets);
  model.targets_ = st.values;
  model.target_mean_ = st.mean;
  model.target_std_ = st.std;

  const Eigen::Index d = points.cols();
  const double fixed_noise =
      std::max(opts.fixed_noise_variance.value_or(opts.noise_floor),
               opts.noise_floor);

  if (opts.fixed_kernel) {
    model.hyper_.kernel = *opts.fixed_kernel;
    model.hyper_.noise_variance = fixed_noise;
    model.condition();
    return model;
  }

  const LogParamLayout layout{d, !opts.fixed_noise_variance.has_value()};
  Eigen::VectorXd lower(layout.size()), upper(layout.size());
  lower.head(d).setConstant(kMinLogLengthscale);
  upper.head(d).setConstant(kMaxLogLengthscale);
  lower[d] = kMinLogSignal;
  upper[d] = kMaxLogSignal;
  if (layout.search_noise) {
    lower[d + 1] = std::log(opts.noise_floor);
    upper[d + 1] = std::max(kMaxLogNoise, lower[d + 1]);
  }

  const Eigen::VectorXd& y = model.targets_;
  const KernelKind kind = opts.kernel;
  auto objective = [&](const Eigen::VectorXd& theta) {
    ObjectiveValue v = lml_and_gradient(points, y, layout.unpack(theta, fixed_noise), kind);
    if (!layout.search_noise) v.gradient.conservativeResize(theta.size());
    return v;
  };

  Rng rng(opts.seed);
  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd start(layout.size());
    for (Eigen::Index j = 0; j < d; ++j) start[j] = -2.0 + 4.0 * uniform01(rng);
    start[d] = 0.0;
    if (layout.search_noise) {
      start[d + 1] = std::log(std::max(opts.noise_floor, 1e-3));
    }
    const MaximizeResult res =
        maximize_bounded(objective, start, lower, upper, opts.max_opt_iters);
    if (res.value > best_value) {
      best_value = res.value;
      best_theta = res.x;
    }
  }
  if (!std::isfinite(best_value)) {
    throw Error(ErrorKind::kNumerical,
                "fit_gp: Gram matrix not positive definite after jitter 1e-4");
  }
  model.hyper_ = layout.unpack(best_theta, fixed_noise);
  model.condition();
  return model;
}

GpModel GpModel::with_hyperparams(const Eigen::MatrixXd& points,
                                  std::span<const double> targets,
                                  const GpHyperparams& hyper, KernelKind kind,
                                  bool standardize_targets) {
  if (points.rows() == 0 ||
      static_cast<std::size_t>(points.rows()) != targets.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "GpModel: need matching non-empty points and targets");
  }
  GpModel model;
  model.points_ = points;
  model.kind_ = kind;
  model.hyper_ = hyper;
  if (standardize_targets) {
    const Standardized st = standardize(targets);
    model.targets_ = st.values;
    model.target_mean_ = st.mean;
    model.target_std_ = st.std;
  } else {
    model.targets_ = Eigen::Map<const Eigen::VectorXd>(
        targets.data(), static_cast<Eigen::Index>(targets.size()));
  }
  model.condition();
  return model;
}

void GpModel::condition() {
  if (!factorize(kernel_matrix(kind_, hyper_.kernel, points_, points_),
                 hyper_.noise_variance, chol_, jitter_)) {
    throw Error(ErrorKind::kNumerical,
                "fit_gp: Gram matrix not positive definite after jitter 1e-4");
  }
  weights_ = chol_.solve(targets_);
  lml_ = lml_from_factor(chol_, targets_, weights_);
}

void GpModel::check_dim(Eigen::Index cols) const {
  if (cols != points_.cols()) {
    throw Error(ErrorKind::kInvalidArgument,
                "gp_predict: point dimension " + std::to_string(cols) +
                    " does not match training dimension " +
                    std::to_string(points_.cols()));
  }
}

Prediction GpModel::predict(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  check_dim(point.size());
  Eigen::VectorXd k(points_.rows());
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    k[i] = kernel_value(kind_, hyper_.kernel, points_.row(i).transpose(), point);
  }
  const double mean_s = k.dot(weights_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  const double var_s = std::max(hyper_.kernel.signal_variance - v.squaredNorm(), 0.0);
  return {target_mean_ + target_std_ * mean_s, var_s * target_std_ * target_std_};
}

double GpModel::predict_mean(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  check_dim(point.size());
  double mean_s = 0.0;
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    mean_s += weights_[i] *
              kernel_value(kind_, hyper_.kernel, points_.row(i).transpose(), point);
  }
  return target_mean_ + target_std_ * mean_s;
}

void GpModel::predict_batch(const Eigen::MatrixXd& points, Eigen::VectorXd& means,
                            Eigen::VectorXd& variances) const {
  check_dim(points.cols());
  const Eigen::MatrixXd cross = kernel_matrix(kind_, hyper_.kernel, points, points_);
  means = (cross * weights_).array() * target_std_ + target_mean_;
  const Eigen::MatrixXd v = chol_.matrixL().solve(cross.transpose());
  variances = ((hyper_.kernel.signal_variance -
                v.colwise().squaredNorm().transpose().array())
                   .max(0.0) *
               target_std_ * target_std_)
                  .matrix();
}

Eigen::VectorXd GpModel::predict_mean_batch(const Eigen::MatrixXd& points) const {
  check_dim(points.cols());
  const Eigen::MatrixXd cross = kernel_matrix(kind_, hyper_.kernel, points, points_);
  return ((cross * weights_).array() * target_std_ + target_mean_).matrix();
}

double expected_improvement(double mean, double variance, double incumbent) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double gain = incumbent - mean;
  if (sigma <= 1e-12) return std::max(gain, 0.0);
  const double z = gain / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(gain * cdf + sigma * pdf, 0.0);
}

double expected_improvement(const GpModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& point,
                            double incumbent) {
  const Prediction p = model.predict(point);
  return expected_improvement(p.mean, p.variance, incumbent);
}

}  // namespace spacetx
