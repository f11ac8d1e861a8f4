#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "spacetx/optimize.hpp"

namespace spacetx {

enum class KernelKind { kMatern52Ard, kSquaredExponentialArd };

struct KernelParams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
};

double kernel_value(KernelKind kind, const KernelParams& params,
                    const Eigen::Ref<const Eigen::VectorXd>& a,
                    const Eigen::Ref<const Eigen::VectorXd>& b);

// Cross-covariance between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(KernelKind kind, const KernelParams& params,
                              const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b);

// Derivatives of the Gram matrix of `x` with respect to each log-lengthscale
// followed by the log signal variance.
std::vector<Eigen::MatrixXd> kernel_gradients(KernelKind kind,
                                              const KernelParams& params,
                                              const Eigen::MatrixXd& x);

struct GpOptions {
  KernelKind kernel = KernelKind::kMatern52Ard;
  // Lower bound on the noise variance, in standardized target units.
  double noise_floor = 1e-8;
  int restarts = 2;
  int max_opt_iters = 50;
  std::uint64_t seed = 0;
  // When set, the noise variance is held at this value instead of searched.
  std::optional<double> fixed_noise_variance;
  // When set, the kernel hyperparameters are used as-is (no search).
  std::optional<KernelParams> fixed_kernel;
};

// Throws Error(kInvalidArgument) when noise_floor < 1e-10 or restarts < 1.
void validate_options(const GpOptions& opts);

struct Standardized {
  Eigen::VectorXd values;
  double mean = 0.0;
  double std = 1.0;
};

// Population standard deviation; a spread below 1e-12 maps to std = 1 and
// all-zero output. Empty input throws.
Standardized standardize(std::span<const double> values);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct GpHyperparams {
  KernelParams kernel;
  double noise_variance = 1e-6;
};

// Zero-mean GP regression on standardized targets. Immutable after
// construction; prediction is safe from several threads.
class GpModel {
 public:
  // Maximizes the log marginal likelihood over log-hyperparameters with
  // opts.restarts random starts (log-lengthscales uniform in [-2, 2]).
  static GpModel fit(const Eigen::MatrixXd& points,
                     std::span<const double> targets, const GpOptions& opts);

  // Conditions on data with fixed hyperparameters. With
  // standardize_targets = false the targets are used unscaled.
  static GpModel with_hyperparams(const Eigen::MatrixXd& points,
                                  std::span<const double> targets,
                                  const GpHyperparams& hyper,
                                  KernelKind kind = KernelKind::kMatern52Ard,
                                  bool standardize_targets = true);

  // Mean and latent-function variance on the original target scale.
  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  double predict_mean(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  // Batched prediction over the rows of `points`.
  void predict_batch(const Eigen::MatrixXd& points, Eigen::VectorXd& means,
                     Eigen::VectorXd& variances) const;
  Eigen::VectorXd predict_mean_batch(const Eigen::MatrixXd& points) const;

  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  const Eigen::MatrixXd& train_points() const { return points_; }
  const Eigen::VectorXd& train_targets_standardized() const { return targets_; }
  double target_mean() const { return target_mean_; }
  double target_std() const { return target_std_; }
  const GpHyperparams& hyperparams() const { return hyper_; }
  KernelKind kernel_kind() const { return kind_; }
  // Jitter added to the diagonal on top of the noise variance.
  double jitter() const { return jitter_; }
  double log_marginal_likelihood() const { return lml_; }

 private:
  GpModel() = default;
  void condition();
  void check_dim(Eigen::Index cols) const;

  Eigen::MatrixXd points_;
  Eigen::VectorXd targets_;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
  GpHyperparams hyper_;
  KernelKind kind_ = KernelKind::kMatern52Ard;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

// Log marginal likelihood of (already standardized) targets under fixed
// hyperparameters; -inf when the Gram matrix cannot be factorized.
double log_marginal_likelihood(const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& targets,
                               const GpHyperparams& hyper, KernelKind kind);

// The same with its gradient with respect to (log lengthscales..., log signal
// variance, log noise variance).
ObjectiveValue log_marginal_likelihood_with_gradient(const Eigen::MatrixXd& points,
                                                     const Eigen::VectorXd& targets,
                                                     const GpHyperparams& hyper,
                                                     KernelKind kind);

// Closed-form EI for minimization. sigma <= 1e-12 gives max(y* - mu, 0).
double expected_improvement(double mean, double variance, double incumbent);
double expected_improvement(const GpModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& point,
                            double incumbent);

}  // namespace spacetx
