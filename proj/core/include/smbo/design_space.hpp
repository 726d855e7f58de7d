#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smbo/random.hpp"

namespace smbo {

enum class ParamKind { num, integer, pow, pow_int, step_int, int_exponent, boolean, cat };

/// Document spelling of a kind ("num", "int", "pow", ...).
std::string to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

/// Native value of one parameter. Continuous kinds (num, pow) hold a double,
/// integer kinds an int64, bool a bool and cat its label.
using ParamValue = std::variant<double, std::int64_t, bool, std::string>;

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::num;
  double lb = 0.0;
  double ub = 0.0;
  double base = 0.0;
  std::int64_t step = 0;
  std::vector<std::string> categories;

  /// Number of unit-cube coordinates: the category count for cat, else 1.
  std::size_t width() const;
  bool is_discrete() const;
  /// Number of feasible values for the discrete kinds (0 for num/pow).
  std::size_t grid_size() const;
  /// i-th grid value for the discrete kinds; i < grid_size().
  ParamValue grid_value(std::size_t i) const;
};

/// A design: one native value per parameter, keyed by parameter name.
struct DesignPoint {
  std::map<std::string, ParamValue> values;

  const ParamValue& at(const std::string& name) const { return values.at(name); }
  double real(const std::string& name) const;
  std::int64_t integer(const std::string& name) const;
  bool boolean(const std::string& name) const;
  const std::string& label(const std::string& name) const;

  friend bool operator==(const DesignPoint&, const DesignPoint&) = default;
};

/// Ordered parameter specifications plus an invertible embedding into the
/// unit hypercube. Numeric kinds map to one coordinate (affine in the value,
/// in log_base of the value for pow/pow_int, or in the grid index for the
/// other integer kinds); bool maps to {0, 1}; cat maps to a one-hot block.
class DesignSpace {
 public:
  DesignSpace() = default;
  /// Validates every spec and name uniqueness; throws ValidationError.
  explicit DesignSpace(std::vector<ParamSpec> params);

  /// Parses the list-of-records document `[{name, type, lb?, ub?, base?, step?, categories?}]`.
  static DesignSpace parse(const nlohmann::json& document);
  nlohmann::json to_json() const;

  const std::vector<ParamSpec>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t embedded_dim() const { return embedded_dim_; }
  /// First embedded coordinate of parameter i.
  std::size_t offset(std::size_t i) const { return offsets_[i]; }
  std::size_t index_of(const std::string& name) const;

  /// Embedded coordinates belonging to non-categorical parameters.
  std::vector<int> scalar_coordinates() const;
  /// One coordinate block per categorical parameter.
  std::vector<std::vector<int>> categorical_blocks() const;

  /// Throws ValidationError naming the offending parameter.
  void validate(const DesignPoint& point) const;
  bool contains(const DesignPoint& point) const;

  Eigen::VectorXd to_unit(const DesignPoint& point) const;
  /// Decodes a unit vector, snapping discrete kinds to the nearest grid
  /// element (round half up on the grid index) and categorical blocks to
  /// their argmax (first index wins ties). Coordinates are clamped to [0, 1].
  DesignPoint from_unit(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  /// Rows are to_unit of each point.
  Eigen::MatrixXd embed(const std::vector<DesignPoint>& points) const;

  /// Uniform in the embedded cube, then decoded.
  std::vector<DesignPoint> sample(std::size_t n, Rng& rng) const;

  /// Converts `{name: value, ...}` into a point, coercing integral numbers
  /// for integer kinds. Throws ValidationError on missing/extra names or
  /// wrong value types; feasibility is checked separately by validate().
  DesignPoint point_from_json(const nlohmann::json& j) const;
  nlohmann::json point_to_json(const DesignPoint& point) const;

  friend bool operator==(const DesignSpace& a, const DesignSpace& b) {
    return a.to_json() == b.to_json();
  }

 private:
  std::vector<ParamSpec> params_;
  std::vector<std::size_t> offsets_;
  std::size_t embedded_dim_ = 0;
};

inline DesignSpace parse_space(const nlohmann::json& document) {
  return DesignSpace::parse(document);
}

}  // namespace smbo
