#include "spacetx/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "spacetx/error.hpp"

namespace spacetx {

SourceTask SourceTask::build(std::string id, const SearchSpace& space,
                             TaskHistory history, const GpOptions& opts,
                             bool fit_surrogate) {
  if (history.size() == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "source task \"" + id + "\" has no observations");
  }
  SourceTask task;
  task.id = std::move(id);
  task.encoded = encode_all(space, history.configs);
  task.history = std::move(history);
  if (fit_surrogate) {
    task.surrogate = std::make_shared<const GpModel>(
        GpModel::fit(task.encoded, task.history.ys, opts));
    if (task.history.size() >= 2) {
      GpOptions region_opts = opts;
      region_opts.seed = stable_hash(opts.seed, std::string_view("region"));
      task.region_kernel =
          std::make_shared<const KernelParams>(fit_region_kernel(task, region_opts));
    }
  }
  return task;
}

KernelParams fit_region_kernel(const SourceTask& source, const GpOptions& opts) {
  const RegionLabels split = make_region_labels(source.history.ys, 0.5);
  return GpcModel::fit(source.encoded, split.labels, opts).kernel_params();
}

std::size_t SourceTask::incumbent_index() const {
  const auto& ys = history.ys;
  return static_cast<std::size_t>(std::min_element(ys.begin(), ys.end()) -
                                  ys.begin());
}

void validate_design_config(const DesignConfig& cfg) {
  if (!(cfg.alpha_min >= 0.0 && cfg.alpha_min < cfg.alpha_max &&
        cfg.alpha_max <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "design config: need 0 <= alpha_min < alpha_max <= 1");
  }
  if (cfg.k < 1) {
    throw Error(ErrorKind::kInvalidArgument, "design config: k must be >= 1");
  }
  if (cfg.min_space_size < 1 || cfg.n_candidates < cfg.min_space_size) {
    throw Error(ErrorKind::kInvalidArgument,
                "design config: need n_candidates >= min_space_size >= 1");
  }
}

std::size_t order_preserving_count(std::span<const double> predicted,
                                   std::span<const double> observed) {
  if (predicted.size() != observed.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "order_preserving_count: length mismatch");
  }
  if (observed.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "order_preserving_count: need at least 2 observations");
  }
  std::size_t count = 0;
  const std::size_t n = observed.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const bool model_less = predicted[j] < predicted[k];
      const bool truth_less = observed[j] < observed[k];
      count += model_less == truth_less ? 1 : 0;
    }
  }
  return count;
}

std::size_t order_preserving_count(const GpModel& surrogate,
                                   const Eigen::MatrixXd& target_points,
                                   std::span<const double> target_ys) {
  const Eigen::VectorXd means = surrogate.predict_mean_batch(target_points);
  return order_preserving_count(
      std::span<const double>(means.data(), static_cast<std::size_t>(means.size())),
      target_ys);
}

double task_similarity(std::span<const double> predicted,
                       std::span<const double> observed) {
  const std::size_t n = observed.size();
  if (n < 2) return 0.5;
  const auto f = static_cast<double>(order_preserving_count(predicted, observed));
  return 2.0 * f / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double task_similarity(const GpModel& surrogate,
                       const Eigen::MatrixXd& target_points,
                       std::span<const double> target_ys) {
  if (target_ys.size() < 2) return 0.5;
  const Eigen::VectorXd means = surrogate.predict_mean_batch(target_points);
  return task_similarity(
      std::span<const double>(means.data(), static_cast<std::size_t>(means.size())),
      target_ys);
}

double adaptive_quantile(double similarity, const DesignConfig& cfg) {
  return cfg.alpha_min + (1.0 - 2.0 * std::max(similarity - 0.5, 0.0)) *
                             (cfg.alpha_max - cfg.alpha_min);
}

ClassifierCache::ClassifierCache(GpOptions gpc_options, bool refit_hyperparameters)
    : options_(std::move(gpc_options)),
      refit_hyperparameters_(refit_hyperparameters) {}

std::shared_ptr<const GpcModel> ClassifierCache::get_or_fit(
    const SourceTask& source, const std::vector<int>& labels) {
  std::shared_ptr<const KernelParams> kernel = source.region_kernel;
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(source.id);
    if (it != entries_.end()) {
      if (it->second.labels == labels) return it->second.model;
      if (!kernel) kernel = it->second.kernel;
    }
  }
  GpOptions opts = options_;
  opts.seed = stable_hash(options_.seed, source.id);
  std::shared_ptr<const GpcModel> model;
  if (refit_hyperparameters_) {
    model = std::make_shared<const GpcModel>(GpcModel::fit(source.encoded, labels, opts));
  } else {
    if (!kernel) kernel = std::make_shared<const KernelParams>(fit_region_kernel(source, opts));
    model = std::make_shared<const GpcModel>(
        GpcModel::with_hyperparams(source.encoded, labels, *kernel, options_.kernel));
  }
  std::unique_lock lock(mutex_);
  entries_[source.id] = Entry{labels, model, kernel};
  ++fits_;
  return model;
}

std::size_t ClassifierCache::fits() const {
  std::shared_lock lock(mutex_);
  return fits_;
}

namespace {

PromisingRegion region_for(const SourceTask& source, double similarity,
                           const DesignConfig& cfg, ClassifierCache& cache) {
  if (source.history.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "source \"" + source.id + "\": need at least 2 observations");
  }
  PromisingRegion region;
  region.source_id = source.id;
  region.similarity = similarity;
  region.alpha_used = adaptive_quantile(similarity, cfg);
  try {
    const RegionLabels labels =
        make_region_labels(source.history.ys, region.alpha_used);
    const auto positives = std::count(labels.labels.begin(), labels.labels.end(), 1);
    region.positive_fraction =
        static_cast<double>(positives) / static_cast<double>(labels.labels.size());
    region.classifier = cache.get_or_fit(source, labels.labels);
  } catch (const Error& e) {
    throw Error(e.kind(), "source \"" + source.id + "\": " + e.what());
  }
  return region;
}

double similarity_of(const SourceTask& source, const Eigen::MatrixXd& target_points,
                     std::span<const double> target_ys) {
  if (target_ys.size() < 2) return 0.5;
  if (!source.surrogate) {
    throw Error(ErrorKind::kInvalidArgument,
                "source \"" + source.id + "\" has no surrogate");
  }
  return task_similarity(*source.surrogate, target_points, target_ys);
}

}  // namespace

PromisingRegion extract_promising_region(const SourceTask& source,
                                         const Eigen::MatrixXd& target_points,
                                         std::span<const double> target_ys,
                                         const DesignConfig& cfg,
                                         ClassifierCache& cache) {
  return region_for(source, similarity_of(source, target_points, target_ys), cfg,
                    cache);
}

std::vector<std::size_t> sample_source_tasks(std::span<const double> similarities,
                                             std::size_t k, Rng& rng) {
  std::vector<std::size_t> remaining(similarities.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  const std::size_t draws = std::min(k, similarities.size());
  std::vector<std::size_t> picked;
  picked.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    double total = 0.0;
    for (std::size_t i : remaining) total += std::max(similarities[i], 0.0);
    std::size_t slot = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      slot = remaining.size();
      for (std::size_t r = 0; r < remaining.size(); ++r) {
        const double w = std::max(similarities[remaining[r]], 0.0);
        acc += w;
        if (w > 0.0 && target < acc) {
          slot = r;
          break;
        }
      }
      if (slot == remaining.size()) {
        // Rounding left target == total; take the last positive weight.
        for (std::size_t r = remaining.size(); r-- > 0;) {
          if (similarities[remaining[r]] > 0.0) {
            slot = r;
            break;
          }
        }
      }
    } else {
      slot = uniform_index(rng, remaining.size());
    }
    picked.push_back(remaining[slot]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
  }
  return picked;
}

std::size_t vote_threshold(std::size_t k) { return std::max<std::size_t>(1, k / 2); }

int vote_membership(std::span<const PromisingRegion> regions,
                    const Eigen::Ref<const Eigen::VectorXd>& point) {
  std::size_t votes = 0;
  for (const auto& region : regions) {
    votes += static_cast<std::size_t>(region.classifier->predict_label(point));
  }
  return votes >= vote_threshold(regions.size()) ? 1 : 0;
}

DesignedSpace design_space(std::span<const SourceTask> sources,
                           const Eigen::MatrixXd& target_points,
                           std::span<const double> target_ys,
                           const Eigen::MatrixXd& candidates,
                           const DesignConfig& cfg, Rng& rng,
                           ClassifierCache& cache, SelectionRule rule) {
  validate_design_config(cfg);
  if (sources.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "design_space: no source tasks");
  }
  if (candidates.rows() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "design_space: empty candidate pool");
  }
  const std::size_t n_sources = sources.size();
  std::vector<double> similarities(n_sources);
  DesignedSpace out;
  out.regions.resize(n_sources);
  for (std::size_t i = 0; i < n_sources; ++i) {
    similarities[i] = similarity_of(sources[i], target_points, target_ys);
    out.regions[i].source_id = sources[i].id;
    out.regions[i].similarity = similarities[i];
    out.regions[i].alpha_used = adaptive_quantile(similarities[i], cfg);
  }

  switch (rule) {
    case SelectionRule::kVoting:
      out.sampled = sample_source_tasks(similarities, cfg.k, rng);
      break;
    case SelectionRule::kMostSimilar:
      out.sampled = {static_cast<std::size_t>(
          std::max_element(similarities.begin(), similarities.end()) -
          similarities.begin())};
      break;
    case SelectionRule::kSingleSample:
      out.sampled = sample_source_tasks(similarities, 1, rng);
      break;
  }

  const auto n_candidates = static_cast<std::size_t>(candidates.rows());
  std::vector<std::size_t> votes(n_candidates, 0);
  for (std::size_t idx : out.sampled) {
    const PromisingRegion region = region_for(sources[idx], similarities[idx], cfg, cache);
    out.regions[idx].positive_fraction = region.positive_fraction;
    out.sampled_task_ids.push_back(sources[idx].id);
    const std::vector<int> labels = region.classifier->predict_labels(candidates);
    for (std::size_t c = 0; c < n_candidates; ++c) {
      votes[c] += static_cast<std::size_t>(labels[c]);
    }
  }
  const std::size_t threshold = vote_threshold(out.sampled.size());
  for (std::size_t c = 0; c < n_candidates; ++c) {
    if (votes[c] >= threshold) out.members.push_back(c);
  }
  if (out.members.size() < cfg.min_space_size) {
    out.members.resize(n_candidates);
    std::iota(out.members.begin(), out.members.end(), std::size_t{0});
    out.fallback_used = true;
  }
  return out;
}

bool BoxRegion::contains(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (full_space) return true;
  return (point.array() >= lower.array()).all() &&
         (point.array() <= upper.array()).all();
}

namespace {

Eigen::MatrixXd incumbent_points(std::span<const SourceTask> sources) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(sources.size()),
                      sources.front().encoded.cols());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) =
        sources[i].encoded.row(static_cast<Eigen::Index>(sources[i].incumbent_index()));
  }
  return pts;
}

}  // namespace

BoxRegion box_design(std::span<const SourceTask> sources, const SearchSpace& space) {
  if (sources.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "box_design: no source tasks");
  }
  BoxRegion box;
  if (space.has_categorical()) {
    box.full_space = true;
    return box;
  }
  const Eigen::MatrixXd pts = incumbent_points(sources);
  box.lower = pts.colwise().minCoeff().transpose();
  box.upper = pts.colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < box.lower.size(); ++j) {
    if (box.upper[j] - box.lower[j] < 1e-12) {
      const double mid = 0.5 * (box.lower[j] + box.upper[j]);
      box.lower[j] = mid - 0.005;
      box.upper[j] = mid + 0.005;
    }
  }
  return box;
}

bool EllipsoidRegion::contains(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (full_space) return true;
  return ellipsoid.radius_sq(point) <= 1.0 + tolerance;
}

EllipsoidRegion ellipsoid_design(std::span<const SourceTask> sources,
                                 const SearchSpace& space, double tolerance) {
  if (sources.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "ellipsoid_design: no source tasks");
  }
  EllipsoidRegion region;
  region.tolerance = tolerance;
  if (space.has_categorical()) {
    region.full_space = true;
    return region;
  }
  const Eigen::MatrixXd pts = incumbent_points(sources);
  // Distinct incumbents only; repeats add nothing to the hull.
  std::vector<Eigen::Index> distinct;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    bool seen = false;
    for (Eigen::Index j : distinct) {
      if ((pts.row(i) - pts.row(j)).squaredNorm() == 0.0) seen = true;
    }
    if (!seen) distinct.push_back(i);
  }
  if (distinct.size() == 1) {
    region.ellipsoid.center = pts.row(distinct.front()).transpose();
    region.ellipsoid.shape =
        Eigen::MatrixXd::Identity(pts.cols(), pts.cols()) / (0.01 * 0.01);
    return region;
  }
  Eigen::MatrixXd unique(static_cast<Eigen::Index>(distinct.size()), pts.cols());
  for (std::size_t r = 0; r < distinct.size(); ++r) {
    unique.row(static_cast<Eigen::Index>(r)) = pts.row(distinct[r]);
  }
  region.ellipsoid = mvee(unique, tolerance);
  return region;
}

}  // namespace spacetx
