#include "spacetx/gpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spacetx/error.hpp"
#include "spacetx/optimize.hpp"
#include "spacetx/random.hpp"

namespace spacetx {

double empirical_quantile(std::span<const double> values, double alpha) {
  if (values.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "quantile of empty sample");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::clamp(alpha, 0.0, 1.0) *
                     static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

RegionLabels make_region_labels(std::span<const double> ys, double alpha) {
  if (ys.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "make_region_labels: need at least 2 observations");
  }
  RegionLabels out;
  out.alpha_used = alpha;
  out.threshold_y = empirical_quantile(ys, alpha);
  out.labels.resize(ys.size());
  std::size_t positives = 0;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    out.labels[j] = ys[j] < out.threshold_y ? 1 : 0;
    positives += static_cast<std::size_t>(out.labels[j]);
  }
  if (positives == 0 || positives == ys.size()) {
    std::size_t best = 0;
    std::size_t worst = ys.size() - 1;
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (ys[j] < ys[best]) best = j;
    }
    for (std::size_t j = ys.size(); j-- > 0;) {
      if (ys[j] > ys[worst]) worst = j;
    }
    if (worst == best) worst = best == 0 ? ys.size() - 1 : 0;
    out.labels[best] = 1;
    out.labels[worst] = 0;
    out.clamped = true;
  }
  return out;
}

std::vector<int> RegionClassifier::predict_labels(const Eigen::MatrixXd& points) const {
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = predict_label(points.row(i).transpose());
  }
  return out;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log sigmoid(z), stable for large |z|.
double log_sigmoid(double z) {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

struct LaplaceState {
  Eigen::VectorXd f;
  Eigen::VectorXd a;
  Eigen::VectorXd pi;
  Eigen::VectorXd sqrt_w;
  Eigen::LLT<Eigen::MatrixXd> chol_b;
  double lml = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

double log_likelihood(const Eigen::VectorXd& f, const Eigen::VectorXd& t) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    sum += log_sigmoid((2.0 * t[i] - 1.0) * f[i]);
  }
  return sum;
}

bool factor_b(const Eigen::MatrixXd& k, const Eigen::VectorXd& sqrt_w,
              Eigen::LLT<Eigen::MatrixXd>& chol) {
  Eigen::MatrixXd b = (sqrt_w * sqrt_w.transpose()).cwiseProduct(k);
  b.diagonal().array() += 1.0;
  chol.compute(b);
  return chol.info() == Eigen::Success;
}

// Newton iterations on the latent posterior mode, from f = K a0 (a0 = 0 when
// not given).
LaplaceState find_mode(const Eigen::MatrixXd& k, const Eigen::VectorXd& t,
                       const Eigen::VectorXd* a0 = nullptr) {
  const Eigen::Index n = t.size();
  LaplaceState s;
  if (a0 != nullptr && a0->size() == n && a0->allFinite()) {
    s.a = *a0;
    s.f = k * s.a;
  } else {
    s.f = Eigen::VectorXd::Zero(n);
    s.a = Eigen::VectorXd::Zero(n);
  }
  double psi = log_likelihood(s.f, t);
  for (int it = 0; it < 100; ++it) {
    s.iterations = it + 1;
    s.pi = s.f.unaryExpr(&sigmoid);
    const Eigen::VectorXd w = s.pi.array() * (1.0 - s.pi.array());
    s.sqrt_w = w.array().sqrt();
    if (!factor_b(k, s.sqrt_w, s.chol_b)) return s;
    const Eigen::VectorXd b = w.cwiseProduct(s.f) + (t - s.pi);
    const Eigen::VectorXd c =
        s.chol_b.matrixL().solve(s.sqrt_w.cwiseProduct(k * b));
    Eigen::VectorXd a_new =
        b - s.sqrt_w.cwiseProduct(s.chol_b.matrixU().solve(c));
    Eigen::VectorXd f_new = k * a_new;
    double psi_new = -0.5 * a_new.dot(f_new) + log_likelihood(f_new, t);
    for (int halve = 0; halve < 10 && psi_new < psi; ++halve) {
      a_new = 0.5 * (s.a + a_new);
      f_new = k * a_new;
      psi_new = -0.5 * a_new.dot(f_new) + log_likelihood(f_new, t);
    }
    s.a = std::move(a_new);
    s.f = std::move(f_new);
    psi = psi_new;
    const Eigen::VectorXd pi_new = s.f.unaryExpr(&sigmoid);
    if (((t - pi_new) - s.a).norm() <= 1e-6) {
      s.converged = true;
      break;
    }
  }
  s.pi = s.f.unaryExpr(&sigmoid);
  const Eigen::VectorXd w = s.pi.array() * (1.0 - s.pi.array());
  s.sqrt_w = w.array().sqrt();
  if (!factor_b(k, s.sqrt_w, s.chol_b)) return s;
  s.lml = -0.5 * s.a.dot(s.f) + log_likelihood(s.f, t) -
          s.chol_b.matrixLLT().diagonal().array().log().sum();
  return s;
}

Eigen::VectorXd to_targets(std::span<const int> labels) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = labels[i] != 0 ? 1.0 : 0.0;
  }
  return t;
}

void check_inputs(const Eigen::MatrixXd& points, std::span<const int> labels) {
  if (static_cast<std::size_t>(points.rows()) != labels.size() || labels.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "fit_gpc: points and labels must have the same non-zero length");
  }
  const bool any_pos = std::any_of(labels.begin(), labels.end(),
                                   [](int v) { return v != 0; });
  const bool any_neg = std::any_of(labels.begin(), labels.end(),
                                   [](int v) { return v == 0; });
  if (!any_pos || !any_neg) {
    throw Error(ErrorKind::kInvalidArgument, "fit_gpc: single-class labels");
  }
}

constexpr double kMinLogLengthscale = -4.605170185988091;
constexpr double kMaxLogLengthscale = 4.605170185988091;
constexpr double kMinLogSignal = -4.605170185988091;
constexpr double kMaxLogSignal = 6.907755278982137;  // log 1000

}  // namespace

namespace {

// Laplace LML and its gradient (Rasmussen and Williams, Alg. 5.1). `warm`
// seeds Newton and receives the new mode weights.
ObjectiveValue laplace_objective(const Eigen::MatrixXd& points, const Eigen::VectorXd& t,
                                 KernelKind kind, const KernelParams& params,
                                 Eigen::VectorXd& warm) {
  const Eigen::Index d = points.cols();
  auto grads = kernel_gradients(kind, params, points);
  const Eigen::MatrixXd& k = grads.back();
  LaplaceState s = find_mode(k, t, warm.size() ? &warm : nullptr);
  if (!s.converged && warm.size()) s = find_mode(k, t);
  ObjectiveValue out;
  out.value = s.lml;
  out.gradient = Eigen::VectorXd::Zero(d + 1);
  if (!std::isfinite(s.lml)) return out;
  warm = s.a;
  const auto l = s.chol_b.matrixL();
  // R = W^1/2 B^-1 W^1/2
  const Eigen::MatrixXd r =
      s.sqrt_w.asDiagonal() * s.chol_b.solve(Eigen::MatrixXd(s.sqrt_w.asDiagonal()));
  const Eigen::MatrixXd c = l.solve(s.sqrt_w.asDiagonal() * k);
  const Eigen::VectorXd w = s.pi.array() * (1.0 - s.pi.array());
  // dW/df enters with the sign that makes this the derivative of log|B|.
  const Eigen::VectorXd dw = (w.array() * (1.0 - 2.0 * s.pi.array())).matrix();
  const Eigen::VectorXd s2 =
      -0.5 * (k.diagonal() - c.colwise().squaredNorm().transpose()).cwiseProduct(dw);
  const Eigen::VectorXd dlogp = t - s.pi;
  for (Eigen::Index j = 0; j <= d; ++j) {
    const Eigen::MatrixXd& dk = grads[static_cast<std::size_t>(j)];
    const double s1 = 0.5 * s.a.dot(dk * s.a) - 0.5 * r.cwiseProduct(dk).sum();
    const Eigen::VectorXd b = dk * dlogp;
    const Eigen::VectorXd s3 = b - k * (r * b);
    out.gradient[j] = s1 + s2.dot(s3);
  }
  return out;
}

}  // namespace

ObjectiveValue laplace_lml_with_gradient(const Eigen::MatrixXd& points,
                                         std::span<const int> labels,
                                         const KernelParams& params, KernelKind kind) {
  check_inputs(points, labels);
  Eigen::VectorXd warm;
  return laplace_objective(points, to_targets(labels), kind, params, warm);
}

GpcModel GpcModel::with_hyperparams(const Eigen::MatrixXd& points,
                                    std::span<const int> labels,
                                    const KernelParams& params, KernelKind kind) {
  check_inputs(points, labels);
  GpcModel model;
  model.points_ = points;
  model.labels_.assign(labels.begin(), labels.end());
  model.kind_ = kind;
  model.params_ = params;
  const Eigen::VectorXd t = to_targets(labels);
  const Eigen::MatrixXd k = kernel_matrix(kind, params, points, points);
  LaplaceState s = find_mode(k, t);
  if (!std::isfinite(s.lml)) {
    throw Error(ErrorKind::kNumerical, "fit_gpc: Laplace factorization failed");
  }
  model.mode_ = std::move(s.f);
  model.residual_ = t - s.pi;
  model.sqrt_w_ = std::move(s.sqrt_w);
  model.chol_b_ = std::move(s.chol_b);
  model.converged_ = s.converged;
  model.newton_iterations_ = s.iterations;
  model.lml_ = s.lml;
  return model;
}

GpcModel GpcModel::fit(const Eigen::MatrixXd& points, std::span<const int> labels,
                       const GpOptions& opts) {
  validate_options(opts);
  check_inputs(points, labels);
  if (opts.fixed_kernel) {
    return with_hyperparams(points, labels, *opts.fixed_kernel, opts.kernel);
  }
  const Eigen::Index d = points.cols();
  const Eigen::Index n = points.rows();
  const Eigen::VectorXd t = to_targets(labels);
  const KernelKind kind = opts.kernel;

  // Successive evaluations start Newton from the previous mode's weights.
  Eigen::VectorXd warm;
  auto objective = [&](const Eigen::VectorXd& theta) {
    KernelParams params{theta.head(d).array().exp(), std::exp(theta[d])};
    return laplace_objective(points, t, kind, params, warm);
  };

  Eigen::VectorXd lower(d + 1), upper(d + 1);
  lower.head(d).setConstant(kMinLogLengthscale);
  upper.head(d).setConstant(kMaxLogLengthscale);
  lower[d] = kMinLogSignal;
  upper[d] = kMaxLogSignal;

  Rng rng(opts.seed);
  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (int rs = 0; rs < opts.restarts; ++rs) {
    Eigen::VectorXd start(d + 1);
    for (Eigen::Index j = 0; j < d; ++j) start[j] = -2.0 + 4.0 * uniform01(rng);
    start[d] = 0.0;
    warm.resize(0);
    const MaximizeResult res =
        maximize_bounded(objective, start, lower, upper, opts.max_opt_iters);
    if (res.value > best_value) {
      best_value = res.value;
      best_theta = res.x;
    }
  }
  (void)n;
  if (!std::isfinite(best_value)) {
    throw Error(ErrorKind::kNumerical, "fit_gpc: no finite marginal likelihood");
  }
  KernelParams best{best_theta.head(d).array().exp(), std::exp(best_theta[d])};
  return with_hyperparams(points, labels, best, kind);
}

void GpcModel::check_dim(Eigen::Index cols) const {
  if (cols != points_.cols()) {
    throw Error(ErrorKind::kInvalidArgument,
                "gpc_predict: point dimension " + std::to_string(cols) +
                    " does not match training dimension " +
                    std::to_string(points_.cols()));
  }
}

double GpcModel::latent_mean(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  check_dim(point.size());
  double mean = 0.0;
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    mean += residual_[i] *
            kernel_value(kind_, params_, points_.row(i).transpose(), point);
  }
  return mean;
}

double GpcModel::predict_proba(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  check_dim(point.size());
  Eigen::VectorXd k(points_.rows());
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    k[i] = kernel_value(kind_, params_, points_.row(i).transpose(), point);
  }
  const double mean = k.dot(residual_);
  const Eigen::VectorXd v = chol_b_.matrixL().solve(sqrt_w_.cwiseProduct(k));
  const double var = std::max(params_.signal_variance - v.squaredNorm(), 0.0);
  // Probit-style moderation of the logistic link.
  const double kappa = 1.0 / std::sqrt(1.0 + std::numbers::pi * var / 8.0);
  const double p = sigmoid(kappa * mean);
  return std::clamp(p, std::numeric_limits<double>::min(),
                    1.0 - std::numeric_limits<double>::epsilon());
}

namespace {

// The moderated probability has the sign of the latent mean, so the label
// only needs the full computation inside a tiny band below zero where
// sigmoid may round to exactly 0.5.
constexpr double kAmbiguousBand = 1e-10;

}  // namespace

int GpcModel::predict_label(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  const double mean = latent_mean(point);
  if (mean >= 0.0) return 1;
  if (mean > -kAmbiguousBand) return predict_proba(point) >= 0.5 ? 1 : 0;
  return 0;
}

std::vector<int> GpcModel::predict_labels(const Eigen::MatrixXd& points) const {
  check_dim(points.cols());
  const Eigen::VectorXd means =
      kernel_matrix(kind_, params_, points, points_) * residual_;
  std::vector<int> out(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int label = 0;
    if (means[i] >= 0.0) {
      label = 1;
    } else if (means[i] > -kAmbiguousBand) {
      label = predict_proba(points.row(i).transpose()) >= 0.5 ? 1 : 0;
    }
    out[static_cast<std::size_t>(i)] = label;
  }
  return out;
}

}  // namespace spacetx
