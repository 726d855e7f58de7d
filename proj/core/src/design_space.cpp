#include "smbo/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

namespace {

constexpr std::pair<ParamKind, const char*> kKindNames[] = {
    {ParamKind::num, "num"},
    {ParamKind::integer, "int"},
    {ParamKind::pow, "pow"},
    {ParamKind::pow_int, "pow_int"},
    {ParamKind::step_int, "step_int"},
    {ParamKind::int_exponent, "int_exponent"},
    {ParamKind::boolean, "bool"},
    {ParamKind::cat, "cat"},
};

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

[[noreturn]] void fail(const std::string& param, const std::string& what) {
  throw ValidationError("parameter '" + param + "': " + what);
}

std::int64_t ipow(std::int64_t base, std::int64_t exponent) {
  std::int64_t r = 1;
  for (std::int64_t i = 0; i < exponent; ++i) r *= base;
  return r;
}

// Exponent k with base^k == value, or -1 when value is not an exact power.
std::int64_t exact_exponent(std::int64_t base, std::int64_t value) {
  if (value < 1) return -1;
  std::int64_t k = 0;
  std::int64_t p = 1;
  while (p < value) {
    p *= base;
    ++k;
  }
  return p == value ? k : -1;
}

std::vector<std::string> allowed_fields(ParamKind kind) {
  switch (kind) {
    case ParamKind::num:
    case ParamKind::integer:
      return {"name", "type", "lb", "ub"};
    case ParamKind::pow:
    case ParamKind::pow_int:
    case ParamKind::int_exponent:
      return {"name", "type", "lb", "ub", "base"};
    case ParamKind::step_int:
      return {"name", "type", "lb", "ub", "step"};
    case ParamKind::boolean:
      return {"name", "type"};
    case ParamKind::cat:
      return {"name", "type", "categories"};
  }
  return {};
}

double number_field(const json& rec, const std::string& param, const char* field) {
  if (!rec.contains(field)) fail(param, std::string("missing field '") + field + "'");
  const auto& v = rec.at(field);
  if (!v.is_number()) fail(param, std::string("field '") + field + "' must be a number");
  return v.get<double>();
}

void validate_spec(const ParamSpec& p) {
  if (p.name.empty()) throw ValidationError("parameter name must be non-empty");
  const bool has_bounds = p.kind != ParamKind::boolean && p.kind != ParamKind::cat;
  if (has_bounds) {
    if (!std::isfinite(p.lb) || !std::isfinite(p.ub)) fail(p.name, "bounds must be finite");
    if (!(p.lb < p.ub)) fail(p.name, "empty interval: lb must be < ub");
  }
  switch (p.kind) {
    case ParamKind::num:
      break;
    case ParamKind::integer:
    case ParamKind::step_int:
      if (!is_integral(p.lb) || !is_integral(p.ub)) fail(p.name, "bounds must be integers");
      if (p.kind == ParamKind::step_int && p.step < 1) fail(p.name, "step must be >= 1");
      break;
    case ParamKind::pow:
      if (!(p.base > 1.0)) fail(p.name, "base must be > 1");
      if (!(p.lb > 0.0)) fail(p.name, "lb must be > 0 for log scaling");
      break;
    case ParamKind::pow_int:
      if (!(p.base > 1.0)) fail(p.name, "base must be > 1");
      if (!is_integral(p.lb) || !is_integral(p.ub)) fail(p.name, "bounds must be integers");
      if (!(p.lb > 0.0)) fail(p.name, "lb must be > 0 for log scaling");
      break;
    case ParamKind::int_exponent: {
      if (!is_integral(p.base) || p.base < 2.0) fail(p.name, "base must be an integer >= 2");
      if (!is_integral(p.lb) || !is_integral(p.ub)) fail(p.name, "bounds must be integers");
      const auto b = static_cast<std::int64_t>(p.base);
      if (exact_exponent(b, static_cast<std::int64_t>(p.lb)) < 0 ||
          exact_exponent(b, static_cast<std::int64_t>(p.ub)) < 0) {
        fail(p.name, "lb and ub must be exact powers of base");
      }
      break;
    }
    case ParamKind::boolean:
      break;
    case ParamKind::cat: {
      if (p.categories.empty()) fail(p.name, "categories must be non-empty");
      std::set<std::string> seen(p.categories.begin(), p.categories.end());
      if (seen.size() != p.categories.size()) fail(p.name, "duplicate category labels");
      break;
    }
  }
}

}  // namespace

std::string to_string(ParamKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ParamKind param_kind_from_string(const std::string& s) {
  for (const auto& [k, name] : kKindNames) {
    if (s == name) return k;
  }
  throw ValidationError("unknown parameter type '" + s + "'");
}

std::size_t ParamSpec::width() const {
  return kind == ParamKind::cat ? categories.size() : 1;
}

bool ParamSpec::is_discrete() const {
  return kind != ParamKind::num && kind != ParamKind::pow;
}

std::size_t ParamSpec::grid_size() const {
  switch (kind) {
    case ParamKind::num:
    case ParamKind::pow:
      return 0;
    case ParamKind::integer:
    case ParamKind::pow_int:
      return static_cast<std::size_t>(ub - lb) + 1;
    case ParamKind::step_int:
      return static_cast<std::size_t>((static_cast<std::int64_t>(ub) - static_cast<std::int64_t>(lb)) / step) + 1;
    case ParamKind::int_exponent: {
      const auto b = static_cast<std::int64_t>(base);
      return static_cast<std::size_t>(exact_exponent(b, static_cast<std::int64_t>(ub)) -
                                      exact_exponent(b, static_cast<std::int64_t>(lb))) +
             1;
    }
    case ParamKind::boolean:
      return 2;
    case ParamKind::cat:
      return categories.size();
  }
  return 0;
}

ParamValue ParamSpec::grid_value(std::size_t i) const {
  const auto lo = static_cast<std::int64_t>(lb);
  const auto idx = static_cast<std::int64_t>(i);
  switch (kind) {
    case ParamKind::integer:
    case ParamKind::pow_int:
      return lo + idx;
    case ParamKind::step_int:
      return lo + idx * step;
    case ParamKind::int_exponent: {
      const auto b = static_cast<std::int64_t>(base);
      return ipow(b, exact_exponent(b, lo) + idx);
    }
    case ParamKind::boolean:
      return i != 0;
    case ParamKind::cat:
      return categories.at(i);
    default:
      throw std::logic_error("grid_value on a continuous parameter");
  }
}

double DesignPoint::real(const std::string& name) const {
  const auto& v = values.at(name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ValidationError("parameter '" + name + "' is not numeric");
}

std::int64_t DesignPoint::integer(const std::string& name) const {
  return std::get<std::int64_t>(values.at(name));
}

bool DesignPoint::boolean(const std::string& name) const {
  return std::get<bool>(values.at(name));
}

const std::string& DesignPoint::label(const std::string& name) const {
  return std::get<std::string>(values.at(name));
}

DesignSpace::DesignSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
  if (params_.empty()) throw ValidationError("design space must contain at least one parameter");
  std::set<std::string> names;
  for (const auto& p : params_) {
    validate_spec(p);
    if (!names.insert(p.name).second) throw ValidationError("duplicate parameter name '" + p.name + "'");
    offsets_.push_back(embedded_dim_);
    embedded_dim_ += p.width();
  }
}

DesignSpace DesignSpace::parse(const json& document) {
  if (!document.is_array()) throw ValidationError("design space document must be a list of parameter records");
  std::vector<ParamSpec> specs;
  for (const auto& rec : document) {
    if (!rec.is_object()) throw ValidationError("parameter record must be an object");
    if (!rec.contains("name") || !rec.at("name").is_string()) {
      throw ValidationError("parameter record requires a string 'name'");
    }
    ParamSpec p;
    p.name = rec.at("name").get<std::string>();
    if (!rec.contains("type") || !rec.at("type").is_string()) fail(p.name, "missing string field 'type'");
    try {
      p.kind = param_kind_from_string(rec.at("type").get<std::string>());
    } catch (const ValidationError& e) {
      fail(p.name, e.what());
    }
    const auto allowed = allowed_fields(p.kind);
    for (const auto& [key, _] : rec.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(p.name, "unexpected field '" + key + "' for type '" + to_string(p.kind) + "'");
      }
    }
    if (p.kind != ParamKind::boolean && p.kind != ParamKind::cat) {
      p.lb = number_field(rec, p.name, "lb");
      p.ub = number_field(rec, p.name, "ub");
    }
    if (p.kind == ParamKind::pow || p.kind == ParamKind::pow_int || p.kind == ParamKind::int_exponent) {
      p.base = number_field(rec, p.name, "base");
    }
    if (p.kind == ParamKind::step_int) {
      const double step = number_field(rec, p.name, "step");
      if (!is_integral(step)) fail(p.name, "step must be an integer");
      p.step = static_cast<std::int64_t>(step);
    }
    if (p.kind == ParamKind::cat) {
      if (!rec.contains("categories") || !rec.at("categories").is_array()) {
        fail(p.name, "missing list field 'categories'");
      }
      for (const auto& c : rec.at("categories")) {
        if (!c.is_string()) fail(p.name, "category labels must be strings");
        p.categories.push_back(c.get<std::string>());
      }
    }
    specs.push_back(std::move(p));
  }
  return DesignSpace(std::move(specs));
}

json DesignSpace::to_json() const {
  json doc = json::array();
  for (const auto& p : params_) {
    json rec = {{"name", p.name}, {"type", to_string(p.kind)}};
    switch (p.kind) {
      case ParamKind::num:
        rec["lb"] = p.lb;
        rec["ub"] = p.ub;
        break;
      case ParamKind::pow:
        rec["lb"] = p.lb;
        rec["ub"] = p.ub;
        rec["base"] = p.base;
        break;
      case ParamKind::integer:
        rec["lb"] = static_cast<std::int64_t>(p.lb);
        rec["ub"] = static_cast<std::int64_t>(p.ub);
        break;
      case ParamKind::pow_int:
      case ParamKind::int_exponent:
        rec["lb"] = static_cast<std::int64_t>(p.lb);
        rec["ub"] = static_cast<std::int64_t>(p.ub);
        rec["base"] = p.base;
        break;
      case ParamKind::step_int:
        rec["lb"] = static_cast<std::int64_t>(p.lb);
        rec["ub"] = static_cast<std::int64_t>(p.ub);
        rec["step"] = p.step;
        break;
      case ParamKind::boolean:
        break;
      case ParamKind::cat:
        rec["categories"] = p.categories;
        break;
    }
    doc.push_back(std::move(rec));
  }
  return doc;
}

std::size_t DesignSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ValidationError("unknown parameter '" + name + "'");
}

std::vector<int> DesignSpace::scalar_coordinates() const {
  std::vector<int> coords;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].kind != ParamKind::cat) coords.push_back(static_cast<int>(offsets_[i]));
  }
  return coords;
}

std::vector<std::vector<int>> DesignSpace::categorical_blocks() const {
  std::vector<std::vector<int>> blocks;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].kind != ParamKind::cat) continue;
    std::vector<int> block;
    for (std::size_t j = 0; j < params_[i].width(); ++j) block.push_back(static_cast<int>(offsets_[i] + j));
    blocks.push_back(std::move(block));
  }
  return blocks;
}

void DesignSpace::validate(const DesignPoint& point) const {
  if (point.values.size() != params_.size()) {
    throw ValidationError("design point has " + std::to_string(point.values.size()) + " values, space has " +
                          std::to_string(params_.size()) + " parameters");
  }
  for (const auto& p : params_) {
    auto it = point.values.find(p.name);
    if (it == point.values.end()) fail(p.name, "missing from design point");
    const ParamValue& v = it->second;
    switch (p.kind) {
      case ParamKind::num:
      case ParamKind::pow: {
        const auto* d = std::get_if<double>(&v);
        if (!d) fail(p.name, "expected a real value");
        if (!std::isfinite(*d) || *d < p.lb || *d > p.ub) fail(p.name, "value outside [lb, ub]");
        break;
      }
      case ParamKind::integer:
      case ParamKind::pow_int:
      case ParamKind::step_int:
      case ParamKind::int_exponent: {
        const auto* i = std::get_if<std::int64_t>(&v);
        if (!i) fail(p.name, "expected an integer value");
        const auto x = static_cast<double>(*i);
        if (x < p.lb || x > p.ub) fail(p.name, "value outside [lb, ub]");
        const auto lo = static_cast<std::int64_t>(p.lb);
        if (p.kind == ParamKind::step_int && (*i - lo) % p.step != 0) fail(p.name, "value not on the step grid");
        if (p.kind == ParamKind::int_exponent && exact_exponent(static_cast<std::int64_t>(p.base), *i) < 0) {
          fail(p.name, "value is not a power of base");
        }
        break;
      }
      case ParamKind::boolean:
        if (!std::holds_alternative<bool>(v)) fail(p.name, "expected a boolean value");
        break;
      case ParamKind::cat: {
        const auto* s = std::get_if<std::string>(&v);
        if (!s) fail(p.name, "expected a category label");
        if (std::find(p.categories.begin(), p.categories.end(), *s) == p.categories.end()) {
          fail(p.name, "unknown category '" + *s + "'");
        }
        break;
      }
    }
  }
}

bool DesignSpace::contains(const DesignPoint& point) const {
  try {
    validate(point);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

namespace {

double grid_coordinate(std::size_t index, std::size_t size) {
  return size <= 1 ? 0.0 : static_cast<double>(index) / static_cast<double>(size - 1);
}

std::size_t grid_index(double u, std::size_t size) {
  if (size <= 1) return 0;
  const double scaled = std::floor(u * static_cast<double>(size - 1) + 0.5);
  return static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(size - 1)));
}

double log_fraction(double v, double lb, double ub) {
  return (std::log(v) - std::log(lb)) / (std::log(ub) - std::log(lb));
}

}  // namespace

Eigen::VectorXd DesignSpace::to_unit(const DesignPoint& point) const {
  validate(point);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(embedded_dim_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    const auto o = static_cast<Eigen::Index>(offsets_[i]);
    const ParamValue& v = point.values.at(p.name);
    switch (p.kind) {
      case ParamKind::num:
        u(o) = (std::get<double>(v) - p.lb) / (p.ub - p.lb);
        break;
      case ParamKind::pow:
        u(o) = log_fraction(std::get<double>(v), p.lb, p.ub);
        break;
      case ParamKind::pow_int:
        u(o) = log_fraction(static_cast<double>(std::get<std::int64_t>(v)), p.lb, p.ub);
        break;
      case ParamKind::integer:
        u(o) = grid_coordinate(static_cast<std::size_t>(std::get<std::int64_t>(v) - static_cast<std::int64_t>(p.lb)),
                               p.grid_size());
        break;
      case ParamKind::step_int:
        u(o) = grid_coordinate(
            static_cast<std::size_t>((std::get<std::int64_t>(v) - static_cast<std::int64_t>(p.lb)) / p.step),
            p.grid_size());
        break;
      case ParamKind::int_exponent: {
        const auto b = static_cast<std::int64_t>(p.base);
        const auto k = exact_exponent(b, std::get<std::int64_t>(v)) - exact_exponent(b, static_cast<std::int64_t>(p.lb));
        u(o) = grid_coordinate(static_cast<std::size_t>(k), p.grid_size());
        break;
      }
      case ParamKind::boolean:
        u(o) = std::get<bool>(v) ? 1.0 : 0.0;
        break;
      case ParamKind::cat: {
        const auto& cats = p.categories;
        const auto pos = std::find(cats.begin(), cats.end(), std::get<std::string>(v)) - cats.begin();
        u(o + pos) = 1.0;
        break;
      }
    }
    if (p.kind != ParamKind::cat) u(o) = std::clamp(u(o), 0.0, 1.0);
  }
  return u;
}

DesignPoint DesignSpace::from_unit(const Eigen::Ref<const Eigen::VectorXd>& u_in) const {
  if (static_cast<std::size_t>(u_in.size()) != embedded_dim_) {
    throw ValidationError("unit vector has length " + std::to_string(u_in.size()) + ", expected " +
                          std::to_string(embedded_dim_));
  }
  DesignPoint point;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    const auto o = static_cast<Eigen::Index>(offsets_[i]);
    const double u = std::clamp(u_in(o), 0.0, 1.0);
    ParamValue value;
    switch (p.kind) {
      case ParamKind::num:
        value = std::clamp(p.lb + u * (p.ub - p.lb), p.lb, p.ub);
        break;
      case ParamKind::pow:
        value = std::clamp(std::exp(std::log(p.lb) + u * (std::log(p.ub) - std::log(p.lb))), p.lb, p.ub);
        break;
      case ParamKind::pow_int: {
        // Nearest integer in the embedded (log) coordinate; ties go up.
        const double raw = std::exp(std::log(p.lb) + u * (std::log(p.ub) - std::log(p.lb)));
        const double lo = std::clamp(std::floor(raw), p.lb, p.ub);
        const double hi = std::clamp(std::ceil(raw), p.lb, p.ub);
        const double dlo = std::abs(u - log_fraction(lo, p.lb, p.ub));
        const double dhi = std::abs(log_fraction(hi, p.lb, p.ub) - u);
        value = static_cast<std::int64_t>(dlo < dhi ? lo : hi);
        break;
      }
      case ParamKind::integer:
      case ParamKind::step_int:
      case ParamKind::int_exponent:
      case ParamKind::boolean:
        value = p.grid_value(grid_index(u, p.grid_size()));
        break;
      case ParamKind::cat: {
        std::size_t best = 0;
        for (std::size_t j = 1; j < p.categories.size(); ++j) {
          if (u_in(o + static_cast<Eigen::Index>(j)) > u_in(o + static_cast<Eigen::Index>(best))) best = j;
        }
        value = p.categories[best];
        break;
      }
    }
    point.values.emplace(p.name, std::move(value));
  }
  return point;
}

Eigen::MatrixXd DesignSpace::embed(const std::vector<DesignPoint>& points) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(embedded_dim_));
  for (std::size_t i = 0; i < points.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = to_unit(points[i]).transpose();
  return X;
}

std::vector<DesignPoint> DesignSpace::sample(std::size_t n, Rng& rng) const {
  if (n == 0) throw ValidationError("sample size must be positive");
  std::vector<DesignPoint> out;
  out.reserve(n);
  Eigen::VectorXd u(static_cast<Eigen::Index>(embedded_dim_));
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = rng.uniform();
    out.push_back(from_unit(u));
  }
  return out;
}

DesignPoint DesignSpace::point_from_json(const json& j) const {
  if (!j.is_object()) throw ValidationError("design point must be an object of name: value");
  DesignPoint point;
  for (const auto& p : params_) {
    if (!j.contains(p.name)) fail(p.name, "missing from design point");
    const auto& v = j.at(p.name);
    switch (p.kind) {
      case ParamKind::num:
      case ParamKind::pow:
        if (!v.is_number()) fail(p.name, "expected a number");
        point.values.emplace(p.name, v.get<double>());
        break;
      case ParamKind::integer:
      case ParamKind::pow_int:
      case ParamKind::step_int:
      case ParamKind::int_exponent: {
        if (!v.is_number() || !is_integral(v.get<double>())) fail(p.name, "expected an integer");
        point.values.emplace(p.name, v.is_number_integer() ? v.get<std::int64_t>()
                                                           : static_cast<std::int64_t>(v.get<double>()));
        break;
      }
      case ParamKind::boolean:
        if (!v.is_boolean()) fail(p.name, "expected a boolean");
        point.values.emplace(p.name, v.get<bool>());
        break;
      case ParamKind::cat:
        if (!v.is_string()) fail(p.name, "expected a category label");
        point.values.emplace(p.name, v.get<std::string>());
        break;
    }
  }
  for (const auto& [key, _] : j.items()) {
    bool known = std::any_of(params_.begin(), params_.end(), [&](const ParamSpec& p) { return p.name == key; });
    if (!known) throw ValidationError("design point has unknown parameter '" + key + "'");
  }
  return point;
}

json DesignSpace::point_to_json(const DesignPoint& point) const {
  json j = json::object();
  for (const auto& [name, value] : point.values) {
    std::visit([&j, &name = name](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

}  // namespace smbo
