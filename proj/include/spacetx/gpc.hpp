#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "spacetx/gp.hpp"

namespace spacetx {

// Binarized source observations: label 1 marks the promising side.
struct RegionLabels {
  std::vector<int> labels;
  double threshold_y = 0.0;
  double alpha_used = 0.0;
  bool clamped = false;
};

// Empirical alpha-quantile with linear interpolation between order
// statistics (position (n-1)*alpha).
double empirical_quantile(std::span<const double> values, double alpha);

// label_j = 1 iff y_j < quantile(y, alpha). When that leaves a single class,
// the best observation (first on ties) is forced to 1 and the worst (last on
// ties) to 0. Throws on fewer than two observations.
RegionLabels make_region_labels(std::span<const double> ys, double alpha);

// Membership classifier for a promising region. Implementations must keep
// predict_label(x) == (predict_proba(x) >= 0.5).
class RegionClassifier {
 public:
  virtual ~RegionClassifier() = default;
  virtual double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& point) const = 0;
  virtual int predict_label(const Eigen::Ref<const Eigen::VectorXd>& point) const = 0;
  // Labels for every row of `points`.
  virtual std::vector<int> predict_labels(const Eigen::MatrixXd& points) const;
};

// Laplace-approximate log marginal likelihood of a GP classifier and its
// gradient with respect to (log lengthscales..., log signal variance).
ObjectiveValue laplace_lml_with_gradient(const Eigen::MatrixXd& points,
                                         std::span<const int> labels,
                                         const KernelParams& params,
                                         KernelKind kind = KernelKind::kMatern52Ard);

// Binary GP classifier, logistic likelihood, Laplace approximation.
class GpcModel final : public RegionClassifier {
 public:
  // Selects kernel hyperparameters by maximizing the Laplace-approximate
  // marginal likelihood (opts.restarts starts), unless opts.fixed_kernel is
  // set. Throws on single-class input.
  static GpcModel fit(const Eigen::MatrixXd& points, std::span<const int> labels,
                      const GpOptions& opts);

  // Laplace posterior under given hyperparameters.
  static GpcModel with_hyperparams(const Eigen::MatrixXd& points,
                                   std::span<const int> labels,
                                   const KernelParams& params,
                                   KernelKind kind = KernelKind::kMatern52Ard);

  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& point) const override;
  int predict_label(const Eigen::Ref<const Eigen::VectorXd>& point) const override;
  std::vector<int> predict_labels(const Eigen::MatrixXd& points) const override;
  double latent_mean(const Eigen::Ref<const Eigen::VectorXd>& point) const;

  bool converged() const { return converged_; }
  int newton_iterations() const { return newton_iterations_; }
  double log_marginal_likelihood() const { return lml_; }
  const KernelParams& kernel_params() const { return params_; }
  KernelKind kernel_kind() const { return kind_; }
  const std::vector<int>& train_labels() const { return labels_; }
  const Eigen::MatrixXd& train_points() const { return points_; }
  const Eigen::VectorXd& laplace_mode() const { return mode_; }

 private:
  GpcModel() = default;
  void check_dim(Eigen::Index cols) const;

  Eigen::MatrixXd points_;
  std::vector<int> labels_;
  KernelKind kind_ = KernelKind::kMatern52Ard;
  KernelParams params_;
  Eigen::VectorXd mode_;
  Eigen::VectorXd residual_;  // t - pi(mode), the predictive-mean weights
  Eigen::VectorXd sqrt_w_;
  Eigen::LLT<Eigen::MatrixXd> chol_b_;
  bool converged_ = false;
  int newton_iterations_ = 0;
  double lml_ = 0.0;
};

}  // namespace spacetx
