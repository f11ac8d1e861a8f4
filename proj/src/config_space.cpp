#include "spacetx/config_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "spacetx/error.hpp"

namespace spacetx {
namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

double to_scale(double v, bool log_scale) {
  return log_scale ? std::log(v) : v;
}

double from_scale(double t, bool log_scale) {
  return log_scale ? std::exp(t) : t;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string describe_value(const Value& v) {
  return std::visit(
      Overloaded{[](double d) { return format_double(d); },
                 [](std::int64_t i) { return std::to_string(i); },
                 [](const std::string& s) { return "\"" + s + "\""; }},
      v);
}

// Collects violations of a single value against its parameter.
void check_value(const ParameterDef& p, const Value& value,
                 std::string_view what, std::vector<Violation>& out) {
  std::visit(
      Overloaded{
          [&](const ContinuousRange& r) {
            const double* v = std::get_if<double>(&value);
            if (v == nullptr) {
              out.push_back({p.name, std::string(what) + " must be a real"});
            } else if (!std::isfinite(*v) || *v < r.low || *v > r.high) {
              out.push_back({p.name, std::string(what) + " " +
                                         describe_value(value) +
                                         " outside [" + format_double(r.low) +
                                         ", " + format_double(r.high) + "]"});
            }
          },
          [&](const IntegerRange& r) {
            const std::int64_t* v = std::get_if<std::int64_t>(&value);
            if (v == nullptr) {
              out.push_back(
                  {p.name, std::string(what) + " must be an integer"});
            } else if (*v < r.low || *v > r.high) {
              out.push_back({p.name, std::string(what) + " " +
                                         std::to_string(*v) + " outside [" +
                                         std::to_string(r.low) + ", " +
                                         std::to_string(r.high) + "]"});
            }
          },
          [&](const CategoricalChoices& c) {
            const std::string* v = std::get_if<std::string>(&value);
            if (v == nullptr) {
              out.push_back({p.name, std::string(what) + " must be a string"});
            } else if (std::find(c.choices.begin(), c.choices.end(), *v) ==
                       c.choices.end()) {
              out.push_back({p.name, std::string(what) + " \"" + *v +
                                         "\" is not a declared choice"});
            }
          }},
      p.kind);
}

std::string join_violations(const std::vector<Violation>& violations) {
  std::string msg;
  for (const auto& v : violations) {
    if (!msg.empty()) msg += "; ";
    msg += v.parameter + ": " + v.message;
  }
  return msg;
}

}  // namespace

std::size_t ParameterDef::encoded_width() const {
  if (const auto* c = std::get_if<CategoricalChoices>(&kind)) {
    return c->choices.size();
  }
  return 1;
}

ParameterDef continuous_param(std::string name, double low, double high,
                              double default_value, bool log_scale) {
  return {std::move(name), ContinuousRange{low, high, log_scale},
          Value{default_value}};
}

ParameterDef integer_param(std::string name, std::int64_t low,
                           std::int64_t high, std::int64_t default_value,
                           bool log_scale) {
  return {std::move(name), IntegerRange{low, high, log_scale},
          Value{default_value}};
}

ParameterDef categorical_param(std::string name,
                               std::vector<std::string> choices,
                               std::string default_value) {
  return {std::move(name), CategoricalChoices{std::move(choices)},
          Value{std::move(default_value)}};
}

SearchSpace::SearchSpace(std::vector<ParameterDef> params)
    : params_(std::move(params)) {
  offsets_.reserve(params_.size());
  for (const auto& p : params_) {
    offsets_.push_back(encoded_dim_);
    encoded_dim_ += p.encoded_width();
  }
}

bool SearchSpace::has_categorical() const {
  return std::any_of(params_.begin(), params_.end(),
                     [](const ParameterDef& p) { return p.is_categorical(); });
}

std::size_t SearchSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return params_.size();
}

std::vector<Violation> validate_space(const SearchSpace& space) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const auto& p : space.params()) {
    if (p.name.empty()) out.push_back({p.name, "empty name"});
    if (!seen.insert(p.name).second) out.push_back({p.name, "duplicate name"});
    bool range_ok = true;
    std::visit(
        Overloaded{
            [&](const ContinuousRange& r) {
              if (!std::isfinite(r.low) || !std::isfinite(r.high)) {
                out.push_back({p.name, "bounds must be finite"});
                range_ok = false;
              } else if (!(r.low < r.high)) {
                out.push_back({p.name, "low < high"});
                range_ok = false;
              }
              if (r.log_scale && !(r.low > 0.0)) {
                out.push_back({p.name, "log_scale requires low > 0"});
                range_ok = false;
              }
            },
            [&](const IntegerRange& r) {
              if (!(r.low < r.high)) {
                out.push_back({p.name, "low < high"});
                range_ok = false;
              }
              if (r.log_scale && !(r.low > 0)) {
                out.push_back({p.name, "log_scale requires low > 0"});
                range_ok = false;
              }
            },
            [&](const CategoricalChoices& c) {
              if (c.choices.empty()) {
                out.push_back({p.name, "choices must be non-empty"});
                range_ok = false;
              }
              std::set<std::string> unique(c.choices.begin(), c.choices.end());
              if (unique.size() != c.choices.size()) {
                out.push_back({p.name, "choices must be unique"});
              }
            }},
        p.kind);
    if (range_ok) check_value(p, p.default_value, "default", out);
  }
  return out;
}

void require_valid_space(const SearchSpace& space) {
  auto violations = validate_space(space);
  if (!violations.empty()) {
    throw Error(ErrorKind::kValidation,
                "invalid search space: " + join_violations(violations));
  }
}

std::vector<Violation> validate_config(const SearchSpace& space,
                                       const Configuration& config) {
  std::vector<Violation> out;
  if (config.values.size() != space.size()) {
    out.push_back({"", "configuration has " +
                           std::to_string(config.values.size()) +
                           " values, space has " +
                           std::to_string(space.size()) + " parameters"});
    return out;
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    check_value(space.params()[i], config.values[i], "value", out);
  }
  return out;
}

EncodedPoint encode(const SearchSpace& space, const Configuration& config) {
  auto violations = validate_config(space, config);
  if (!violations.empty()) {
    throw Error(ErrorKind::kValidation,
                "invalid configuration: " + join_violations(violations));
  }
  EncodedPoint point = EncodedPoint::Zero(
      static_cast<Eigen::Index>(space.encoded_dim()));
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.params()[i];
    const auto at = static_cast<Eigen::Index>(space.offset(i));
    std::visit(
        Overloaded{
            [&](const ContinuousRange& r) {
              const double v = std::get<double>(config.values[i]);
              const double lo = to_scale(r.low, r.log_scale);
              const double hi = to_scale(r.high, r.log_scale);
              point[at] = std::clamp((to_scale(v, r.log_scale) - lo) / (hi - lo),
                                     0.0, 1.0);
            },
            [&](const IntegerRange& r) {
              const double v =
                  static_cast<double>(std::get<std::int64_t>(config.values[i]));
              const double lo = to_scale(static_cast<double>(r.low), r.log_scale);
              const double hi =
                  to_scale(static_cast<double>(r.high), r.log_scale);
              point[at] = std::clamp((to_scale(v, r.log_scale) - lo) / (hi - lo),
                                     0.0, 1.0);
            },
            [&](const CategoricalChoices& c) {
              const auto& v = std::get<std::string>(config.values[i]);
              const auto pos = static_cast<Eigen::Index>(
                  std::find(c.choices.begin(), c.choices.end(), v) -
                  c.choices.begin());
              point[at + pos] = 1.0;
            }},
        p.kind);
  }
  return point;
}

Eigen::MatrixXd encode_all(const SearchSpace& space,
                           std::span<const Configuration> configs) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(configs.size()),
                      static_cast<Eigen::Index>(space.encoded_dim()));
  for (std::size_t r = 0; r < configs.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = encode(space, configs[r]).transpose();
  }
  return out;
}

Configuration decode(const SearchSpace& space, const EncodedPoint& point) {
  if (static_cast<std::size_t>(point.size()) != space.encoded_dim()) {
    throw Error(ErrorKind::kInvalidArgument,
                "decode: point has dimension " + std::to_string(point.size()) +
                    ", expected " + std::to_string(space.encoded_dim()));
  }
  Configuration config;
  config.values.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.params()[i];
    const auto at = static_cast<Eigen::Index>(space.offset(i));
    std::visit(
        Overloaded{
            [&](const ContinuousRange& r) {
              const double c = std::clamp(point[at], 0.0, 1.0);
              const double lo = to_scale(r.low, r.log_scale);
              const double hi = to_scale(r.high, r.log_scale);
              const double v = from_scale(lo + c * (hi - lo), r.log_scale);
              config.values.emplace_back(std::clamp(v, r.low, r.high));
            },
            [&](const IntegerRange& r) {
              const double c = std::clamp(point[at], 0.0, 1.0);
              const double lo = to_scale(static_cast<double>(r.low), r.log_scale);
              const double hi =
                  to_scale(static_cast<double>(r.high), r.log_scale);
              const double v = from_scale(lo + c * (hi - lo), r.log_scale);
              const auto rounded = static_cast<std::int64_t>(std::llround(v));
              config.values.emplace_back(std::clamp(rounded, r.low, r.high));
            },
            [&](const CategoricalChoices& c) {
              std::size_t best = 0;
              for (std::size_t k = 1; k < c.choices.size(); ++k) {
                if (point[at + static_cast<Eigen::Index>(k)] >
                    point[at + static_cast<Eigen::Index>(best)]) {
                  best = k;
                }
              }
              config.values.emplace_back(c.choices[best]);
            }},
        p.kind);
  }
  return config;
}

std::vector<Configuration> sample_uniform(const SearchSpace& space,
                                          std::size_t n, Rng& rng) {
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Configuration config;
    config.values.reserve(space.size());
    for (const auto& p : space.params()) {
      std::visit(
          Overloaded{
              [&](const ContinuousRange& r) {
                const double lo = to_scale(r.low, r.log_scale);
                const double hi = to_scale(r.high, r.log_scale);
                const double v = from_scale(lo + uniform01(rng) * (hi - lo),
                                            r.log_scale);
                config.values.emplace_back(std::clamp(v, r.low, r.high));
              },
              [&](const IntegerRange& r) {
                std::int64_t v;
                if (r.log_scale) {
                  const double lo = std::log(static_cast<double>(r.low));
                  const double hi = std::log(static_cast<double>(r.high) + 1.0);
                  v = static_cast<std::int64_t>(
                      std::floor(std::exp(lo + uniform01(rng) * (hi - lo))));
                } else {
                  v = r.low + static_cast<std::int64_t>(uniform_index(
                                  rng, static_cast<std::size_t>(r.high - r.low + 1)));
                }
                config.values.emplace_back(std::clamp(v, r.low, r.high));
              },
              [&](const CategoricalChoices& c) {
                config.values.emplace_back(
                    c.choices[uniform_index(rng, c.choices.size())]);
              }},
          p.kind);
    }
    out.push_back(std::move(config));
  }
  return out;
}

Configuration default_configuration(const SearchSpace& space) {
  Configuration config;
  for (const auto& p : space.params()) config.values.push_back(p.default_value);
  return config;
}

std::string value_to_string(const Value& value) {
  return std::visit(
      Overloaded{[](double d) { return format_double(d); },
                 [](std::int64_t i) { return std::to_string(i); },
                 [](const std::string& s) { return s; }},
      value);
}

std::string canonical_key(const Configuration& config) {
  std::string key;
  for (const auto& v : config.values) {
    std::visit(Overloaded{[&](double d) { key += 'r' + format_double(d); },
                          [&](std::int64_t i) { key += 'i' + std::to_string(i); },
                          [&](const std::string& s) { key += 's' + s; }},
               v);
    key += '\x1f';
  }
  return key;
}

nlohmann::json space_to_json(const SearchSpace& space) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : space.params()) {
    nlohmann::json j;
    j["name"] = p.name;
    std::visit(Overloaded{[&](const ContinuousRange& r) {
                            j["type"] = "continuous";
                            j["low"] = r.low;
                            j["high"] = r.high;
                            j["log"] = r.log_scale;
                            j["default"] = std::get<double>(p.default_value);
                          },
                          [&](const IntegerRange& r) {
                            j["type"] = "integer";
                            j["low"] = r.low;
                            j["high"] = r.high;
                            j["log"] = r.log_scale;
                            j["default"] =
                                std::get<std::int64_t>(p.default_value);
                          },
                          [&](const CategoricalChoices& c) {
                            j["type"] = "categorical";
                            j["choices"] = c.choices;
                            j["default"] =
                                std::get<std::string>(p.default_value);
                          }},
               p.kind);
    params.push_back(std::move(j));
  }
  return nlohmann::json{{"params", std::move(params)}};
}

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorKind::kParse, what);
}

const nlohmann::json& field(const nlohmann::json& j, const char* key,
                            const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) parse_fail(context + ": missing \"" + key + "\"");
  return *it;
}

double number_field(const nlohmann::json& j, const char* key,
                    const std::string& context) {
  const auto& v = field(j, key, context);
  if (!v.is_number()) parse_fail(context + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

std::int64_t integer_value(const nlohmann::json& v, const std::string& context) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9.0e15) {
      return static_cast<std::int64_t>(d);
    }
  }
  parse_fail(context + " must be an integer");
}

}  // namespace

SearchSpace space_from_json(const nlohmann::json& j) {
  if (!j.is_object()) parse_fail("space must be an object");
  const auto& params = field(j, "params", "space");
  if (!params.is_array()) parse_fail("space: \"params\" must be an array");
  std::vector<ParameterDef> defs;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& pj = params[i];
    const std::string ctx = "space.params[" + std::to_string(i) + "]";
    if (!pj.is_object()) parse_fail(ctx + " must be an object");
    const auto& name = field(pj, "name", ctx);
    if (!name.is_string()) parse_fail(ctx + ": \"name\" must be a string");
    const auto& type = field(pj, "type", ctx);
    if (!type.is_string()) parse_fail(ctx + ": \"type\" must be a string");
    const std::string t = type.get<std::string>();
    const std::string pctx = ctx + " (" + name.get<std::string>() + ")";
    ParameterDef def;
    def.name = name.get<std::string>();
    const bool log_scale = pj.value("log", false);
    if (t == "continuous") {
      def.kind = ContinuousRange{number_field(pj, "low", pctx),
                                 number_field(pj, "high", pctx), log_scale};
      if (pj.contains("default")) {
        def.default_value = number_field(pj, "default", pctx);
      } else {
        const auto& r = std::get<ContinuousRange>(def.kind);
        def.default_value = log_scale ? std::sqrt(r.low * r.high)
                                      : 0.5 * (r.low + r.high);
      }
    } else if (t == "integer") {
      IntegerRange r{integer_value(field(pj, "low", pctx), pctx + " low"),
                     integer_value(field(pj, "high", pctx), pctx + " high"),
                     log_scale};
      def.kind = r;
      def.default_value = pj.contains("default")
                              ? integer_value(pj["default"], pctx + " default")
                              : r.low;
    } else if (t == "categorical") {
      const auto& choices = field(pj, "choices", pctx);
      if (!choices.is_array()) parse_fail(pctx + ": \"choices\" must be an array");
      CategoricalChoices c;
      for (const auto& cj : choices) {
        if (!cj.is_string()) parse_fail(pctx + ": choices must be strings");
        c.choices.push_back(cj.get<std::string>());
      }
      if (pj.contains("default")) {
        if (!pj["default"].is_string()) {
          parse_fail(pctx + ": \"default\" must be a string");
        }
        def.default_value = pj["default"].get<std::string>();
      } else {
        def.default_value = c.choices.empty() ? std::string() : c.choices.front();
      }
      def.kind = std::move(c);
    } else {
      parse_fail(pctx + ": unknown type \"" + t + "\"");
    }
    defs.push_back(std::move(def));
  }
  SearchSpace space(std::move(defs));
  require_valid_space(space);
  return space;
}

nlohmann::json config_to_json(const SearchSpace& space,
                              const Configuration& config) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::visit([&](const auto& v) { j[space.params()[i].name] = v; },
               config.values[i]);
  }
  return j;
}

Configuration config_from_json(const SearchSpace& space,
                               const nlohmann::json& j) {
  if (!j.is_object()) parse_fail("config must be an object");
  Configuration config;
  config.values.reserve(space.size());
  for (const auto& p : space.params()) {
    auto it = j.find(p.name);
    if (it == j.end()) parse_fail("config: missing parameter \"" + p.name + "\"");
    const auto& v = *it;
    const std::string ctx = "parameter \"" + p.name + "\"";
    std::visit(Overloaded{[&](const ContinuousRange&) {
                            if (!v.is_number()) parse_fail(ctx + " must be a number");
                            config.values.emplace_back(v.get<double>());
                          },
                          [&](const IntegerRange&) {
                            config.values.emplace_back(integer_value(v, ctx));
                          },
                          [&](const CategoricalChoices&) {
                            if (!v.is_string()) parse_fail(ctx + " must be a string");
                            config.values.emplace_back(v.get<std::string>());
                          }},
               p.kind);
  }
  if (j.size() != space.size()) {
    for (const auto& [key, _] : j.items()) {
      if (space.find(key) == space.size()) {
        parse_fail("config: unknown parameter \"" + key + "\"");
      }
    }
  }
  auto violations = validate_config(space, config);
  if (!violations.empty()) {
    throw Error(ErrorKind::kValidation,
                "invalid configuration: " + join_violations(violations));
  }
  return config;
}

}  // namespace spacetx
