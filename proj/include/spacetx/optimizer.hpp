#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "spacetx/config_space.hpp"
#include "spacetx/error.hpp"
#include "spacetx/gp.hpp"
#include "spacetx/random.hpp"
#include "spacetx/transfer.hpp"

namespace spacetx {

enum class DesignerKind {
  kNone,
  kBox,
  kEllipsoid,
  kOurs,
  kOursArgmax,        // most similar source only
  kOursSingleSample,  // one source drawn by similarity
};

enum class DriverKind { kRandomSearch, kGp };

struct DesignerSpec {
  DesignerKind kind = DesignerKind::kNone;
  std::optional<DesignConfig> design;  // present iff an "ours" variant
};

bool is_transfer_designer(DesignerKind kind);
std::string_view designer_token(DesignerKind kind);
std::string_view driver_token(DriverKind kind);

// A driver paired with a space designer, e.g. "ours-gp" or "rs".
struct Method {
  std::string token;
  DriverKind driver = DriverKind::kGp;
  DesignerSpec designer;
};

// Tokens are <designer>-<driver>; bare "rs"/"gp" use no designer.
// Throws Error(kBadMethod) naming the token and listing valid designers.
Method parse_method(std::string_view token, const DesignConfig& design = {});
std::vector<Method> parse_methods(std::string_view comma_list,
                                  const DesignConfig& design = {});

// Configurations under consideration in one iteration, with their encodings
// and canonical keys.
struct CandidatePool {
  std::vector<Configuration> configs;
  Eigen::MatrixXd encoded;
  std::vector<std::string> keys;

  std::size_t size() const { return configs.size(); }
  static CandidatePool build(const SearchSpace& space,
                             std::vector<Configuration> configs);
};

// The target observations so far, encoded.
struct Observations {
  std::vector<Configuration> configs;
  std::vector<double> ys;
  Eigen::MatrixXd encoded;
};

struct DesignOutcome {
  std::vector<std::size_t> members;  // ascending pool indices
  bool fallback_used = false;
  std::vector<std::size_t> sampled;
  std::vector<RegionSummary> regions;
};

// Restricts a candidate pool each iteration.
class SpaceDesigner {
 public:
  virtual ~SpaceDesigner() = default;
  virtual DesignOutcome design(const Observations& observations,
                               const CandidatePool& pool, Rng& rng) = 0;
};

using SourceSet = std::shared_ptr<const std::vector<SourceTask>>;

// Builds the designer for a spec. "ours" kinds need sources with fitted
// surrogates; box and ellipsoid only read source histories.
std::unique_ptr<SpaceDesigner> make_designer(const DesignerSpec& spec,
                                             const SearchSpace& space,
                                             SourceSet sources,
                                             const GpOptions& gpc_options = {});

struct Evaluation {
  std::size_t trial = 0;  // 1-based
  Configuration config;
  double y = 0.0;
};

struct DesignTrace {
  std::size_t trial = 0;
  std::size_t space_size = 0;
  bool fallback_used = false;
  std::vector<std::size_t> sampled;
  std::vector<RegionSummary> regions;
  std::vector<std::size_t> members;  // filled when RunSpec::record_members
};

struct ExperimentResult {
  std::vector<Evaluation> evaluations;
  std::vector<double> incumbent_trajectory;
  std::vector<std::size_t> designed_space_sizes;
  std::vector<DesignTrace> design_traces;  // one per designed iteration
  std::uint64_t seed = 0;
};

// Thrown when the objective fails mid-run; carries what ran so far.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& message, ExperimentResult partial)
      : Error(ErrorKind::kInvalidArgument, message), partial_(std::move(partial)) {}
  const ExperimentResult& partial() const { return partial_; }

 private:
  ExperimentResult partial_;
};

using Objective = std::function<double(const Configuration&)>;

struct RunSpec {
  const SearchSpace* space = nullptr;
  Objective evaluate;
  // Fixed (tabular) pool. When null, every iteration draws
  // resample_candidates fresh uniform configurations.
  const CandidatePool* pool = nullptr;
  std::size_t resample_candidates = 2000;
  // Initial configurations; when empty, n_init are drawn from the seed.
  std::vector<Configuration> initial;
  std::size_t n_init = 3;
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  GpOptions gp;
  bool record_members = false;
};

// n_init distinct pool indices drawn uniformly without replacement.
std::vector<std::size_t> initial_design(std::size_t pool_size, std::size_t n_init,
                                        Rng& rng);
std::vector<Configuration> initial_design(std::span<const Configuration> candidates,
                                          std::size_t n_init, Rng& rng);

// Unvisited member with the largest EI (lowest index on ties); falls back to
// a uniform unvisited pool entry when every member is visited. Returns a
// pool index. Throws when the whole pool is visited.
std::size_t suggest_next(const GpModel& target_gp,
                         std::span<const std::size_t> members,
                         const CandidatePool& pool,
                         const std::unordered_set<std::string>& visited,
                         double incumbent, Rng& rng);

ExperimentResult run_bo(const RunSpec& spec, SpaceDesigner& designer);
ExperimentResult run_random_search(const RunSpec& spec, SpaceDesigner& designer);

// Builds the designer from the spec and dispatches on the driver.
ExperimentResult run_method(const RunSpec& spec, const Method& method,
                            SourceSet sources);

}  // namespace spacetx
