#include "spacetx/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spacetx {

bool is_transfer_designer(DesignerKind kind) {
  return kind == DesignerKind::kOurs || kind == DesignerKind::kOursArgmax ||
         kind == DesignerKind::kOursSingleSample;
}

std::string_view designer_token(DesignerKind kind) {
  switch (kind) {
    case DesignerKind::kNone: return "none";
    case DesignerKind::kBox: return "box";
    case DesignerKind::kEllipsoid: return "ellipsoid";
    case DesignerKind::kOurs: return "ours";
    case DesignerKind::kOursArgmax: return "ours-v1";
    case DesignerKind::kOursSingleSample: return "ours-v2";
  }
  return "none";
}

std::string_view driver_token(DriverKind kind) {
  return kind == DriverKind::kGp ? "gp" : "rs";
}

namespace {

constexpr const char* kValidDesigners = "none, box, ellipsoid, ours, ours-v1, ours-v2";

[[noreturn]] void bad_method(std::string_view token) {
  throw Error(ErrorKind::kBadMethod,
              "unknown method \"" + std::string(token) +
                  "\"; expected <designer>-<driver> or a bare driver, "
                  "designers: " + kValidDesigners + "; drivers: rs, gp");
}

}  // namespace

Method parse_method(std::string_view token, const DesignConfig& design) {
  Method m;
  m.token = std::string(token);
  std::string_view driver = token;
  std::string_view designer = "none";
  if (const auto dash = token.rfind('-'); dash != std::string_view::npos) {
    designer = token.substr(0, dash);
    driver = token.substr(dash + 1);
  }
  if (driver == "gp") {
    m.driver = DriverKind::kGp;
  } else if (driver == "rs") {
    m.driver = DriverKind::kRandomSearch;
  } else {
    bad_method(token);
  }
  bool found = false;
  for (DesignerKind kind : {DesignerKind::kNone, DesignerKind::kBox,
                            DesignerKind::kEllipsoid, DesignerKind::kOurs,
                            DesignerKind::kOursArgmax,
                            DesignerKind::kOursSingleSample}) {
    if (designer == designer_token(kind)) {
      m.designer.kind = kind;
      found = true;
    }
  }
  if (!found) bad_method(token);
  if (is_transfer_designer(m.designer.kind)) {
    validate_design_config(design);
    m.designer.design = design;
  }
  return m;
}

std::vector<Method> parse_methods(std::string_view comma_list,
                                  const DesignConfig& design) {
  std::vector<Method> methods;
  std::size_t start = 0;
  while (start <= comma_list.size()) {
    const std::size_t comma = comma_list.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? comma_list.size() : comma;
    std::string_view token = comma_list.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token.empty()) {
      throw Error(ErrorKind::kBadMethod, "empty method token in \"" +
                                             std::string(comma_list) + "\"");
    }
    Method m = parse_method(token, design);
    for (const auto& existing : methods) {
      if (existing.token == m.token) {
        throw Error(ErrorKind::kBadMethod, "duplicate method \"" + m.token + "\"");
      }
    }
    methods.push_back(std::move(m));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return methods;
}

CandidatePool CandidatePool::build(const SearchSpace& space,
                                   std::vector<Configuration> configs) {
  CandidatePool pool;
  pool.encoded = encode_all(space, configs);
  pool.keys.reserve(configs.size());
  for (const auto& c : configs) pool.keys.push_back(canonical_key(c));
  pool.configs = std::move(configs);
  return pool;
}

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

class FullSpaceDesigner final : public SpaceDesigner {
 public:
  DesignOutcome design(const Observations&, const CandidatePool& pool, Rng&) override {
    DesignOutcome out;
    out.members = all_indices(pool.size());
    return out;
  }
};

template <class Region>
class GeometricDesigner final : public SpaceDesigner {
 public:
  explicit GeometricDesigner(Region region) : region_(std::move(region)) {}

  DesignOutcome design(const Observations&, const CandidatePool& pool, Rng&) override {
    DesignOutcome out;
    if (region_.full_space) {
      out.members = all_indices(pool.size());
      return out;
    }
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (region_.contains(pool.encoded.row(static_cast<Eigen::Index>(i)).transpose())) {
        out.members.push_back(i);
      }
    }
    return out;
  }

 private:
  Region region_;
};

class TransferDesigner final : public SpaceDesigner {
 public:
  TransferDesigner(SourceSet sources, DesignConfig cfg, SelectionRule rule,
                   const GpOptions& gpc_options)
      : sources_(std::move(sources)),
        cfg_(cfg),
        rule_(rule),
        cache_(gpc_options) {}

  DesignOutcome design(const Observations& obs, const CandidatePool& pool,
                       Rng& rng) override {
    DesignedSpace designed = design_space(*sources_, obs.encoded, obs.ys,
                                          pool.encoded, cfg_, rng, cache_, rule_);
    DesignOutcome out;
    out.members = std::move(designed.members);
    out.fallback_used = designed.fallback_used;
    out.sampled = std::move(designed.sampled);
    out.regions = std::move(designed.regions);
    return out;
  }

 private:
  SourceSet sources_;
  DesignConfig cfg_;
  SelectionRule rule_;
  ClassifierCache cache_;
};

}  // namespace

std::unique_ptr<SpaceDesigner> make_designer(const DesignerSpec& spec,
                                             const SearchSpace& space,
                                             SourceSet sources,
                                             const GpOptions& gpc_options) {
  if (spec.kind == DesignerKind::kNone) return std::make_unique<FullSpaceDesigner>();
  if (!sources || sources->empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("designer \"") + std::string(designer_token(spec.kind)) +
                    "\" needs at least one source task");
  }
  switch (spec.kind) {
    case DesignerKind::kBox:
      return std::make_unique<GeometricDesigner<BoxRegion>>(box_design(*sources, space));
    case DesignerKind::kEllipsoid:
      return std::make_unique<GeometricDesigner<EllipsoidRegion>>(
          ellipsoid_design(*sources, space));
    default:
      break;
  }
  if (!spec.design) {
    throw Error(ErrorKind::kInvalidArgument, "transfer designer needs a DesignConfig");
  }
  validate_design_config(*spec.design);
  const SelectionRule rule = spec.kind == DesignerKind::kOurs ? SelectionRule::kVoting
                             : spec.kind == DesignerKind::kOursArgmax
                                 ? SelectionRule::kMostSimilar
                                 : SelectionRule::kSingleSample;
  return std::make_unique<TransferDesigner>(std::move(sources), *spec.design, rule,
                                            gpc_options);
}

std::vector<std::size_t> initial_design(std::size_t pool_size, std::size_t n_init,
                                        Rng& rng) {
  if (n_init > pool_size) {
    throw Error(ErrorKind::kInvalidArgument,
                "initial_design: n_init " + std::to_string(n_init) +
                    " exceeds pool size " + std::to_string(pool_size));
  }
  // Partial Fisher-Yates.
  std::vector<std::size_t> idx = all_indices(pool_size);
  for (std::size_t i = 0; i < n_init; ++i) {
    const std::size_t j = i + uniform_index(rng, pool_size - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n_init);
  return idx;
}

std::vector<Configuration> initial_design(std::span<const Configuration> candidates,
                                          std::size_t n_init, Rng& rng) {
  std::vector<Configuration> out;
  for (std::size_t i : initial_design(candidates.size(), n_init, rng)) {
    out.push_back(candidates[i]);
  }
  return out;
}

namespace {

std::size_t uniform_unvisited(const CandidatePool& pool,
                              const std::unordered_set<std::string>& visited,
                              Rng& rng) {
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!visited.contains(pool.keys[i])) open.push_back(i);
  }
  if (open.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "budget exceeds pool");
  }
  return open[uniform_index(rng, open.size())];
}

}  // namespace

std::size_t suggest_next(const GpModel& target_gp,
                         std::span<const std::size_t> members,
                         const CandidatePool& pool,
                         const std::unordered_set<std::string>& visited,
                         double incumbent, Rng& rng) {
  std::vector<std::size_t> open;
  open.reserve(members.size());
  for (std::size_t m : members) {
    if (!visited.contains(pool.keys[m])) open.push_back(m);
  }
  if (open.empty()) return uniform_unvisited(pool, visited, rng);
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(open.size()), pool.encoded.cols());
  for (std::size_t r = 0; r < open.size(); ++r) {
    rows.row(static_cast<Eigen::Index>(r)) =
        pool.encoded.row(static_cast<Eigen::Index>(open[r]));
  }
  Eigen::VectorXd means, variances;
  target_gp.predict_batch(rows, means, variances);
  std::size_t best = 0;
  double best_ei = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < open.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    const double ei = expected_improvement(means[i], variances[i], incumbent);
    if (ei > best_ei || (ei == best_ei && open[r] < open[best])) {
      best_ei = ei;
      best = r;
    }
  }
  return open[best];
}

namespace {

// Shared bookkeeping of both drivers.
class RunState {
 public:
  explicit RunState(const RunSpec& spec) : spec_(spec) {
    if (spec.space == nullptr || !spec.evaluate) {
      throw Error(ErrorKind::kInvalidArgument, "run: space and objective are required");
    }
    if (spec.trials < 1) {
      throw Error(ErrorKind::kInvalidArgument, "run: need at least one trial");
    }
    if (spec.pool == nullptr && spec.resample_candidates == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "run: need a fixed pool or resample_candidates > 0");
    }
    result_.seed = spec.seed;
    obs_.encoded.resize(0, static_cast<Eigen::Index>(spec.space->encoded_dim()));
  }

  const CandidatePool& pool_for_iteration(Rng& rng) {
    if (spec_.pool != nullptr) return *spec_.pool;
    fresh_ = CandidatePool::build(
        *spec_.space, sample_uniform(*spec_.space, spec_.resample_candidates, rng));
    return fresh_;
  }

  std::size_t pool_size() const {
    return spec_.pool != nullptr ? spec_.pool->size() : spec_.resample_candidates;
  }

  void record(const Configuration& config, std::size_t space_size) {
    const std::string key = canonical_key(config);
    if (visited_.contains(key)) {
      throw Error(ErrorKind::kInvalidArgument, "configuration evaluated twice");
    }
    double y = 0.0;
    const std::size_t trial = result_.evaluations.size() + 1;
    try {
      y = spec_.evaluate(config);
    } catch (const std::exception& e) {
      throw EvaluationError("evaluation failed at trial " + std::to_string(trial) +
                                ": " + e.what(),
                            result_);
    }
    if (!std::isfinite(y)) {
      throw EvaluationError(
          "evaluation returned a non-finite value at trial " + std::to_string(trial),
          result_);
    }
    visited_.insert(key);
    const double best = result_.incumbent_trajectory.empty()
                            ? y
                            : std::min(result_.incumbent_trajectory.back(), y);
    result_.evaluations.push_back({trial, config, y});
    result_.incumbent_trajectory.push_back(best);
    result_.designed_space_sizes.push_back(space_size);
    const Eigen::Index row = obs_.encoded.rows();
    obs_.encoded.conservativeResize(row + 1, Eigen::NoChange);
    obs_.encoded.row(row) = encode(*spec_.space, config).transpose();
    obs_.configs.push_back(config);
    obs_.ys.push_back(y);
  }

  std::vector<Configuration> initial_configs(Rng& rng, std::size_t n_init) const {
    if (!spec_.initial.empty()) return spec_.initial;
    if (spec_.pool != nullptr) return initial_design(spec_.pool->configs, n_init, rng);
    return sample_uniform(*spec_.space, n_init, rng);
  }

  void trace(const DesignOutcome& outcome) {
    DesignTrace t;
    t.trial = result_.evaluations.size() + 1;
    t.space_size = outcome.members.size();
    t.fallback_used = outcome.fallback_used;
    t.sampled = outcome.sampled;
    t.regions = outcome.regions;
    if (spec_.record_members) t.members = outcome.members;
    result_.design_traces.push_back(std::move(t));
  }

  std::size_t done() const { return result_.evaluations.size(); }
  double incumbent() const { return result_.incumbent_trajectory.back(); }
  const Observations& observations() const { return obs_; }
  const std::unordered_set<std::string>& visited() const { return visited_; }
  ExperimentResult take() { return std::move(result_); }

 private:
  const RunSpec& spec_;
  ExperimentResult result_;
  Observations obs_;
  std::unordered_set<std::string> visited_;
  CandidatePool fresh_;
};

}  // namespace

ExperimentResult run_bo(const RunSpec& spec, SpaceDesigner& designer) {
  RunState state(spec);
  Rng rng(spec.seed);
  const std::vector<Configuration> initial = state.initial_configs(rng, spec.n_init);
  if (initial.empty() || initial.size() > spec.trials) {
    throw Error(ErrorKind::kInvalidArgument, "run_bo: need trials >= n_init >= 1");
  }
  for (const auto& config : initial) state.record(config, state.pool_size());

  while (state.done() < spec.trials) {
    const CandidatePool& pool = state.pool_for_iteration(rng);
    GpOptions gp_opts = spec.gp;
    gp_opts.seed = stable_hash(spec.seed, std::string_view("target-gp"),
                               static_cast<std::uint64_t>(state.done()));
    const Observations& obs = state.observations();
    const GpModel model = GpModel::fit(obs.encoded, obs.ys, gp_opts);
    const DesignOutcome outcome = designer.design(obs, pool, rng);
    state.trace(outcome);
    const std::size_t pick =
        suggest_next(model, outcome.members, pool, state.visited(), state.incumbent(), rng);
    state.record(pool.configs[pick], outcome.members.size());
  }
  return state.take();
}

ExperimentResult run_random_search(const RunSpec& spec, SpaceDesigner& designer) {
  RunState state(spec);
  Rng rng(spec.seed);
  if (spec.initial.size() > spec.trials) {
    throw Error(ErrorKind::kInvalidArgument,
                "run_random_search: more initial configurations than trials");
  }
  for (const auto& config : spec.initial) state.record(config, state.pool_size());

  while (state.done() < spec.trials) {
    const CandidatePool& pool = state.pool_for_iteration(rng);
    const DesignOutcome outcome = designer.design(state.observations(), pool, rng);
    state.trace(outcome);
    std::vector<std::size_t> open;
    for (std::size_t m : outcome.members) {
      if (!state.visited().contains(pool.keys[m])) open.push_back(m);
    }
    const std::size_t pick = open.empty()
                                 ? uniform_unvisited(pool, state.visited(), rng)
                                 : open[uniform_index(rng, open.size())];
    state.record(pool.configs[pick], outcome.members.size());
  }
  return state.take();
}

ExperimentResult run_method(const RunSpec& spec, const Method& method,
                            SourceSet sources) {
  GpOptions gpc_options = spec.gp;
  gpc_options.seed = stable_hash(spec.seed, std::string_view("gpc"));
  auto designer = make_designer(method.designer, *spec.space, std::move(sources),
                                gpc_options);
  return method.driver == DriverKind::kGp ? run_bo(spec, *designer)
                                          : run_random_search(spec, *designer);
}

}  // namespace spacetx
