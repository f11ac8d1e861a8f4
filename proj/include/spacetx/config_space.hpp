#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "spacetx/random.hpp"

namespace spacetx {

struct ContinuousRange {
  double low = 0.0;
  double high = 1.0;
  bool log_scale = false;
};

struct IntegerRange {
  std::int64_t low = 0;
  std::int64_t high = 1;
  bool log_scale = false;
};

struct CategoricalChoices {
  std::vector<std::string> choices;
};

// A parameter value. The alternative must match the parameter kind:
// double for continuous, int64 for integer, string for categorical.
using Value = std::variant<double, std::int64_t, std::string>;

struct ParameterDef {
  std::string name;
  std::variant<ContinuousRange, IntegerRange, CategoricalChoices> kind;
  Value default_value;

  bool is_categorical() const {
    return std::holds_alternative<CategoricalChoices>(kind);
  }
  // Number of encoded coordinates this parameter occupies.
  std::size_t encoded_width() const;
};

ParameterDef continuous_param(std::string name, double low, double high,
                              double default_value, bool log_scale = false);
ParameterDef integer_param(std::string name, std::int64_t low,
                           std::int64_t high, std::int64_t default_value,
                           bool log_scale = false);
ParameterDef categorical_param(std::string name,
                               std::vector<std::string> choices,
                               std::string default_value);

struct Violation {
  std::string parameter;
  std::string message;
};

// Ordered list of parameters. Construction does not validate; call
// validate_space (or parse via space_from_json, which does).
class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParameterDef> params);

  const std::vector<ParameterDef>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t encoded_dim() const { return encoded_dim_; }
  std::size_t offset(std::size_t param_index) const {
    return offsets_[param_index];
  }
  bool has_categorical() const;
  // Index of the named parameter, or size() when absent.
  std::size_t find(std::string_view name) const;

 private:
  std::vector<ParameterDef> params_;
  std::vector<std::size_t> offsets_;
  std::size_t encoded_dim_ = 0;
};

std::vector<Violation> validate_space(const SearchSpace& space);
// Throws Error(kValidation) listing every violation.
void require_valid_space(const SearchSpace& space);

struct Configuration {
  std::vector<Value> values;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

using EncodedPoint = Eigen::VectorXd;

// Returns an empty vector when the configuration is valid for the space.
std::vector<Violation> validate_config(const SearchSpace& space,
                                       const Configuration& config);

EncodedPoint encode(const SearchSpace& space, const Configuration& config);
// Encodes a batch into the rows of a matrix.
Eigen::MatrixXd encode_all(const SearchSpace& space,
                           std::span<const Configuration> configs);

// Integers round to nearest and clamp; categorical blocks decode by argmax
// with ties going to the lowest choice index.
Configuration decode(const SearchSpace& space, const EncodedPoint& point);

// n == 0 yields an empty list.
std::vector<Configuration> sample_uniform(const SearchSpace& space,
                                          std::size_t n, Rng& rng);

Configuration default_configuration(const SearchSpace& space);

// Exact textual key; two configurations share a key iff they are equal.
std::string canonical_key(const Configuration& config);

nlohmann::json space_to_json(const SearchSpace& space);
// Validates; throws Error(kValidation) on violations, Error(kParse) on
// malformed entries.
SearchSpace space_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const SearchSpace& space,
                              const Configuration& config);
// Parses and validates an object keyed by parameter name.
Configuration config_from_json(const SearchSpace& space,
                               const nlohmann::json& j);

std::string value_to_string(const Value& value);

}  // namespace spacetx
