#include "smbo/acquisition.hpp"

#include <cmath>
#include <numbers>

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

std::string to_string(Direction d) { return d == Direction::maximize ? "maximize" : "minimize"; }

Direction direction_from_string(const std::string& s) {
  if (s == "maximize") return Direction::maximize;
  if (s == "minimize") return Direction::minimize;
  throw ValidationError("direction must be 'maximize' or 'minimize', got '" + s + "'");
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double acq_ei(double mu, double sigma, double y_best, double xi) {
  if (!(sigma >= 0.0)) throw ValidationError("acq_ei: sigma must be >= 0");
  const double imp = mu - y_best - xi;
  if (sigma == 0.0) return std::max(imp, 0.0);
  const double z = imp / sigma;
  return std::max(imp * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
}

double acq_pi(double mu, double sigma, double y_best, double xi) {
  if (!(sigma >= 0.0)) throw ValidationError("acq_pi: sigma must be >= 0");
  const double imp = mu - y_best - xi;
  if (sigma == 0.0) return imp > 0.0 ? 1.0 : 0.0;
  return normal_cdf(imp / sigma);
}

double acq_ucb(double mu, double sigma, double beta) { return mu + beta * sigma; }

double acq_lcb(double mu, double sigma, double beta) { return mu - beta * sigma; }

Eigen::VectorXd acq_thompson(const GPModel& model, const Eigen::MatrixXd& candidates, Rng& rng) {
  if (candidates.rows() == 0) throw ValidationError("acq_thompson: candidate set is empty");
  return sample_posterior(model, candidates, rng, 1).front();
}

double beta_finite(double t, double cardinality, double delta) {
  if (!(t >= 1.0)) throw ValidationError("beta_finite: t must be >= 1");
  if (!(cardinality >= 1.0)) throw ValidationError("beta_finite: cardinality must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("beta_finite: delta must lie in (0, 1)");
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return 2.0 * std::log(cardinality * t * t * pi2 / (6.0 * delta));
}

double beta_compact(double t, double d, double delta, double a, double b, double r) {
  if (!(t >= 1.0)) throw ValidationError("beta_compact: t must be >= 1");
  if (!(d > 0.0 && a > 0.0 && b > 0.0 && r > 0.0)) throw ValidationError("beta_compact: d, a, b, r must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("beta_compact: delta must lie in (0, 1)");
  const double inner = 4.0 * d * a / delta;
  if (!(inner > std::numbers::e)) {
    throw ValidationError("beta_compact: 4*d*a/delta must exceed e so that sqrt(log(4*d*a/delta)) is "
                          "well defined and the logarithm of the second term positive");
  }
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return 2.0 * std::log(2.0 * t * t * pi2 / (3.0 * delta)) +
         2.0 * d * std::log(t * t * d * b * r * std::sqrt(std::log(inner)));
}

double BetaSchedule::at(std::size_t t) const {
  const double tt = static_cast<double>(t);
  switch (kind) {
    case Kind::constant: return value;
    case Kind::finite: return beta_finite(tt, cardinality, delta);
    case Kind::compact: return beta_compact(tt, dim, delta, a, b, r);
  }
  return value;
}

void BetaSchedule::validate() const {
  if (kind == Kind::constant) {
    if (!(value >= 0.0) || !std::isfinite(value)) throw ValidationError("beta schedule: constant must be finite and >= 0");
    return;
  }
  at(1);  // domain checks
}

json BetaSchedule::to_json() const {
  switch (kind) {
    case Kind::constant: return {{"kind", "constant"}, {"value", value}};
    case Kind::finite: return {{"kind", "finite"}, {"cardinality", cardinality}, {"delta", delta}};
    case Kind::compact:
      return {{"kind", "compact"}, {"dim", dim}, {"delta", delta}, {"a", a}, {"b", b}, {"r", r}};
  }
  return {};
}

BetaSchedule BetaSchedule::from_json(const json& j) {
  BetaSchedule s;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    s.kind = Kind::constant;
    s.value = j.at("value").get<double>();
  } else if (kind == "finite") {
    s.kind = Kind::finite;
    s.cardinality = j.at("cardinality").get<double>();
    s.delta = j.at("delta").get<double>();
  } else if (kind == "compact") {
    s.kind = Kind::compact;
    s.dim = j.at("dim").get<double>();
    s.delta = j.at("delta").get<double>();
    s.a = j.at("a").get<double>();
    s.b = j.at("b").get<double>();
    s.r = j.at("r").get<double>();
  } else {
    throw ValidationError("unknown beta schedule kind '" + kind + "'");
  }
  s.validate();
  return s;
}

std::string to_string(AcquisitionKind k) {
  switch (k) {
    case AcquisitionKind::ei: return "EI";
    case AcquisitionKind::pi: return "PI";
    case AcquisitionKind::ucb: return "UCB";
    case AcquisitionKind::lcb: return "LCB";
    case AcquisitionKind::thompson: return "Thompson";
  }
  return "";
}

AcquisitionKind acquisition_kind_from_string(const std::string& s) {
  if (s == "EI" || s == "ei") return AcquisitionKind::ei;
  if (s == "PI" || s == "pi") return AcquisitionKind::pi;
  if (s == "UCB" || s == "ucb") return AcquisitionKind::ucb;
  if (s == "LCB" || s == "lcb") return AcquisitionKind::lcb;
  if (s == "Thompson" || s == "thompson") return AcquisitionKind::thompson;
  throw ValidationError("unknown acquisition kind '" + s + "'");
}

double AcquisitionSpec::sigma_weight(std::size_t t) const {
  if (beta_schedule) return std::sqrt(beta_schedule->at(t));
  return beta;
}

void AcquisitionSpec::validate() const {
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw ValidationError("acquisition xi must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("acquisition beta must be finite and >= 0");
  if (beta_schedule) beta_schedule->validate();
  if (kind == AcquisitionKind::lcb && direction == Direction::maximize) {
    throw ValidationError("LCB is a minimization acquisition; use UCB to maximize");
  }
}

json AcquisitionSpec::to_json() const {
  json j{{"kind", to_string(kind)}, {"direction", to_string(direction)}};
  if (kind == AcquisitionKind::ei || kind == AcquisitionKind::pi) j["xi"] = xi;
  if (kind == AcquisitionKind::ucb || kind == AcquisitionKind::lcb) {
    if (beta_schedule) {
      j["beta_schedule"] = beta_schedule->to_json();
    } else {
      j["beta"] = beta;
    }
  }
  return j;
}

AcquisitionSpec AcquisitionSpec::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("acquisition must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "kind" && key != "xi" && key != "beta" && key != "beta_schedule" && key != "direction") {
      throw ValidationError("acquisition: unexpected field '" + key + "'");
    }
  }
  AcquisitionSpec s;
  s.kind = acquisition_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("direction")) s.direction = direction_from_string(j.at("direction").get<std::string>());
  if (j.contains("xi")) s.xi = j.at("xi").get<double>();
  if (j.contains("beta") && j.contains("beta_schedule")) {
    throw ValidationError("acquisition: give either beta or beta_schedule, not both");
  }
  if (j.contains("beta")) s.beta = j.at("beta").get<double>();
  if (j.contains("beta_schedule")) s.beta_schedule = BetaSchedule::from_json(j.at("beta_schedule"));
  s.validate();
  return s;
}

Eigen::VectorXd acquisition_scores(const AcquisitionSpec& spec, const Eigen::VectorXd& mean,
                                   const Eigen::VectorXd& stddev, double y_best, std::size_t t,
                                   const Eigen::VectorXd* draw) {
  const auto m = mean.size();
  const double sign = spec.direction == Direction::maximize ? 1.0 : -1.0;
  Eigen::VectorXd out(m);
  switch (spec.kind) {
    case AcquisitionKind::ei:
      for (Eigen::Index i = 0; i < m; ++i) out(i) = acq_ei(sign * mean(i), stddev(i), sign * y_best, spec.xi);
      break;
    case AcquisitionKind::pi:
      for (Eigen::Index i = 0; i < m; ++i) out(i) = acq_pi(sign * mean(i), stddev(i), sign * y_best, spec.xi);
      break;
    case AcquisitionKind::ucb: {
      const double w = spec.sigma_weight(t);
      for (Eigen::Index i = 0; i < m; ++i) out(i) = acq_ucb(sign * mean(i), stddev(i), w);
      break;
    }
    case AcquisitionKind::lcb: {
      const double w = spec.sigma_weight(t);
      for (Eigen::Index i = 0; i < m; ++i) out(i) = -acq_lcb(mean(i), stddev(i), w);
      break;
    }
    case AcquisitionKind::thompson:
      if (draw == nullptr || draw->size() != m) throw ValidationError("Thompson scoring needs a joint draw");
      out = sign * *draw;
      break;
  }
  return out;
}

}  // namespace smbo
