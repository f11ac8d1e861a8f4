#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spacetx/config_space.hpp"
#include "spacetx/gp.hpp"
#include "spacetx/gpc.hpp"
#include "spacetx/mvee.hpp"
#include "spacetx/random.hpp"

namespace spacetx {

// Observed (configuration, objective) pairs of one task.
struct TaskHistory {
  std::vector<Configuration> configs;
  std::vector<double> ys;

  std::size_t size() const { return ys.size(); }
  void add(Configuration config, double y) {
    configs.push_back(std::move(config));
    ys.push_back(y);
  }
};

// A previously tuned task: its history and a regression surrogate fit once
// on that history.
struct SourceTask {
  std::string id;
  TaskHistory history;
  Eigen::MatrixXd encoded;  // rows align with history
  std::shared_ptr<const GpModel> surrogate;  // null when not needed
  // Classifier kernel fit on the median split of the history; reused for
  // every quantile labeling. Null when not needed.
  std::shared_ptr<const KernelParams> region_kernel;

  // Encodes the history and, when fit_surrogate is set, fits the surrogate
  // and the region kernel.
  static SourceTask build(std::string id, const SearchSpace& space,
                          TaskHistory history, const GpOptions& opts,
                          bool fit_surrogate = true);

  // Row of the best (lowest) observation; first on ties.
  std::size_t incumbent_index() const;
};

// Kernel hyperparameters of a classifier trained on the median split
// (alpha = 0.5) of the source history.
KernelParams fit_region_kernel(const SourceTask& source, const GpOptions& opts);

struct DesignConfig {
  double alpha_min = 0.05;
  double alpha_max = 0.95;
  std::size_t k = 5;
  // Size of the fresh uniform pool per iteration on non-tabular tasks.
  std::size_t n_candidates = 2000;
  // Fewer admitted candidates than this returns the full pool.
  std::size_t min_space_size = 10;
};

// Throws Error(kInvalidArgument) on violated invariants.
void validate_design_config(const DesignConfig& cfg);

// Pairs (j < k) whose predicted ordering agrees with the observed one under
// the strict-< XNOR rule; pairs tied on both sides count as agreeing.
std::size_t order_preserving_count(std::span<const double> predicted,
                                   std::span<const double> observed);
std::size_t order_preserving_count(const GpModel& surrogate,
                                   const Eigen::MatrixXd& target_points,
                                   std::span<const double> target_ys);

// 2F / (n (n - 1)); 0.5 when fewer than two observations.
double task_similarity(std::span<const double> predicted,
                       std::span<const double> observed);
double task_similarity(const GpModel& surrogate,
                       const Eigen::MatrixXd& target_points,
                       std::span<const double> target_ys);

double adaptive_quantile(double similarity, const DesignConfig& cfg);

struct PromisingRegion {
  std::string source_id;
  std::shared_ptr<const RegionClassifier> classifier;
  double alpha_used = 0.0;
  double similarity = 0.0;
  double positive_fraction = 0.0;  // share of 1-labels in the training set
};

// Fitted classifiers keyed by source id, reused while the label vector is
// unchanged. Safe for concurrent lookups; inserts take an exclusive lock.
//
// Kernel hyperparameters come from the source's region kernel (fit here on
// first use when absent), and each label vector only recomputes the Laplace
// posterior. With refit_hyperparameters every new label vector gets a full
// hyperparameter search instead.
class ClassifierCache {
 public:
  explicit ClassifierCache(GpOptions gpc_options = {},
                           bool refit_hyperparameters = false);

  std::shared_ptr<const GpcModel> get_or_fit(const SourceTask& source,
                                             const std::vector<int>& labels);
  std::size_t fits() const;

 private:
  struct Entry {
    std::vector<int> labels;
    std::shared_ptr<const GpcModel> model;
    std::shared_ptr<const KernelParams> kernel;
  };
  GpOptions options_;
  bool refit_hyperparameters_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;
  std::size_t fits_ = 0;
};

PromisingRegion extract_promising_region(const SourceTask& source,
                                         const Eigen::MatrixXd& target_points,
                                         std::span<const double> target_ys,
                                         const DesignConfig& cfg,
                                         ClassifierCache& cache);

// min(k, K) distinct indices, each draw proportional to the remaining
// similarities (uniform when those sum to zero).
std::vector<std::size_t> sample_source_tasks(std::span<const double> similarities,
                                             std::size_t k, Rng& rng);

// Ensemble threshold max(1, floor(k / 2)).
std::size_t vote_threshold(std::size_t k);
int vote_membership(std::span<const PromisingRegion> regions,
                    const Eigen::Ref<const Eigen::VectorXd>& point);

enum class SelectionRule {
  kVoting,        // k sampled sources, majority vote
  kMostSimilar,   // region of the single most similar source
  kSingleSample,  // region of one source drawn by similarity
};

struct RegionSummary {
  std::string source_id;
  double similarity = 0.0;
  double alpha_used = 0.0;
  double positive_fraction = 0.0;
};

struct DesignedSpace {
  std::vector<std::size_t> sampled;  // indices into sources
  std::vector<std::string> sampled_task_ids;
  std::vector<std::size_t> members;  // ascending indices into the candidates
  bool fallback_used = false;
  std::vector<RegionSummary> regions;  // one per source
};

// Similarity per source, region extraction, task sampling, then the vote
// over the encoded candidates. Admitting fewer than cfg.min_space_size
// candidates returns every candidate with fallback_used set.
DesignedSpace design_space(std::span<const SourceTask> sources,
                           const Eigen::MatrixXd& target_points,
                           std::span<const double> target_ys,
                           const Eigen::MatrixXd& candidates,
                           const DesignConfig& cfg, Rng& rng,
                           ClassifierCache& cache,
                           SelectionRule rule = SelectionRule::kVoting);

struct BoxRegion {
  bool full_space = false;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& point) const;
};

// Bounding box of the encoded source incumbents; degenerate sides are
// widened to 0.01. Spaces with categorical parameters give the full space.
BoxRegion box_design(std::span<const SourceTask> sources, const SearchSpace& space);

struct EllipsoidRegion {
  bool full_space = false;
  Ellipsoid ellipsoid;
  double tolerance = 1e-6;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& point) const;
};

// MVEE of the encoded source incumbents; a single distinct incumbent gives a
// ball of radius 0.01. Spaces with categorical parameters give the full space.
EllipsoidRegion ellipsoid_design(std::span<const SourceTask> sources,
                                 const SearchSpace& space,
                                 double tolerance = 1e-6);

}  // namespace spacetx
