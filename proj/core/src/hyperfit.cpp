#include "smbo/hyperfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

namespace {

json bounds_json(const std::pair<double, double>& b) { return json::array({b.first, b.second}); }

std::pair<double, double> bounds_from(const json& j, const char* key, std::pair<double, double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2 || !(v[0] <= v[1])) throw ValidationError(std::string("hyperfit bounds '") + key + "' must be [lo, hi]");
  return {v[0], v[1]};
}

/// Flat search vector: [log kernel params, log noise (optional), mean params].
class Objective {
 public:
  Objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, GPHyperparams family, const HyperfitConfig& config)
      : X_(X), y_(y), hp_(std::move(family)), config_(config) {
    n_kernel_ = static_cast<Eigen::Index>(hp_.kernel.num_params());
    n_mean_ = static_cast<Eigen::Index>(hp_.mean.num_params());
    const Eigen::Index dim = n_kernel_ + (config.fit_noise ? 1 : 0) + n_mean_;
    lo_.resize(dim);
    hi_.resize(dim);
    const auto roles = hp_.kernel.roles();
    const auto& b = config.bounds;
    for (Eigen::Index i = 0; i < n_kernel_; ++i) {
      std::pair<double, double> r;
      switch (roles[static_cast<std::size_t>(i)]) {
        case HyperRole::variance: r = b.variance; break;
        case HyperRole::lengthscale: r = b.lengthscale; break;
        default: r = b.other; break;
      }
      lo_(i) = std::log(r.first);
      hi_(i) = std::log(r.second);
    }
    Eigen::Index pos = n_kernel_;
    if (config.fit_noise) {
      lo_(pos) = std::log(b.noise.first);
      hi_(pos) = std::log(b.noise.second);
      ++pos;
    }
    for (Eigen::Index i = 0; i < n_mean_; ++i) {
      lo_(pos + i) = b.mean.first;
      hi_(pos + i) = b.mean.second;
    }
  }

  Eigen::Index dim() const { return lo_.size(); }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }

  Eigen::VectorXd clamp(const Eigen::VectorXd& theta) const { return theta.cwiseMax(lo_).cwiseMin(hi_); }

  Eigen::VectorXd pack(const GPHyperparams& hp) const {
    Eigen::VectorXd theta(dim());
    theta.head(n_kernel_) = hp.kernel.params().array().log();
    Eigen::Index pos = n_kernel_;
    if (config_.fit_noise) theta(pos++) = std::log(std::max(hp.noise, 1e-300));
    theta.segment(pos, n_mean_) = hp.mean.params();
    return theta;
  }

  GPHyperparams unpack(const Eigen::VectorXd& theta) const {
    GPHyperparams hp = hp_;
    hp.kernel.set_params(theta.head(n_kernel_).array().exp().matrix());
    Eigen::Index pos = n_kernel_;
    if (config_.fit_noise) hp.noise = std::exp(theta(pos++));
    if (n_mean_ > 0) hp.mean.set_params(theta.segment(pos, n_mean_));
    return hp;
  }

  struct Value {
    double f;
    Eigen::VectorXd grad;
  };

  std::optional<Value> operator()(const Eigen::VectorXd& theta) const {
    try {
      const auto model = gp_fit(X_, y_, unpack(theta), FitOptions{config_.standardize, std::nullopt});
      Value v{log_marginal_likelihood(model), log_marginal_likelihood_gradient(model, config_.fit_noise)};
      if (!std::isfinite(v.f) || !v.grad.allFinite()) return std::nullopt;
      return v;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  }

  /// Gradient with components pointing out of the box at an active bound removed.
  Eigen::VectorXd projected(const Eigen::VectorXd& theta, const Eigen::VectorXd& g) const {
    Eigen::VectorXd p = g;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if ((theta(i) <= lo_(i) && p(i) < 0.0) || (theta(i) >= hi_(i) && p(i) > 0.0)) p(i) = 0.0;
    }
    return p;
  }

 private:
  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  GPHyperparams hp_;
  const HyperfitConfig& config_;
  Eigen::Index n_kernel_ = 0;
  Eigen::Index n_mean_ = 0;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
};

struct Ascent {
  Eigen::VectorXd theta;
  double f;
};

Ascent local_ascent(const Objective& obj, Eigen::VectorXd theta, Objective::Value value, int max_iterations) {
  constexpr double kArmijo = 1e-4;
  double step = 0.1;
  Eigen::VectorXd prev_theta;
  Eigen::VectorXd prev_grad;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd direction = obj.projected(theta, value.grad);
    if (direction.lpNorm<Eigen::Infinity>() < 1e-6) break;
    if (prev_theta.size() > 0) {
      // Barzilai-Borwein length for an ascent problem: s.s / -(s.dy).
      const Eigen::VectorXd s = theta - prev_theta;
      const double sy = -s.dot(value.grad - prev_grad);
      step = sy > 1e-12 ? std::clamp(s.squaredNorm() / sy, 1e-4, 10.0) : 0.1;
    } else {
      step = std::min(0.1, 1.0 / direction.lpNorm<Eigen::Infinity>());
    }

    bool accepted = false;
    for (int backtrack = 0; backtrack < 30; ++backtrack, step *= 0.5) {
      const Eigen::VectorXd candidate = obj.clamp(theta + step * direction);
      const Eigen::VectorXd delta = candidate - theta;
      if (delta.lpNorm<Eigen::Infinity>() < 1e-12) break;
      const auto next = obj(candidate);
      if (next && next->f >= value.f + kArmijo * value.grad.dot(delta)) {
        prev_theta = theta;
        prev_grad = value.grad;
        const double gain = next->f - value.f;
        theta = candidate;
        value = *next;
        accepted = true;
        if (gain < 1e-10 * (1.0 + std::abs(value.f))) it = max_iterations;
        break;
      }
    }
    if (!accepted) break;
  }
  return {theta, value.f};
}

}  // namespace

json HyperfitConfig::to_json() const {
  return {{"restarts", restarts},
          {"max_iterations", max_iterations},
          {"fit_noise", fit_noise},
          {"standardize", standardize},
          {"seed", seed},
          {"bounds",
           {{"lengthscale", bounds_json(bounds.lengthscale)},
            {"variance", bounds_json(bounds.variance)},
            {"noise", bounds_json(bounds.noise)},
            {"other", bounds_json(bounds.other)},
            {"mean", bounds_json(bounds.mean)}}}};
}

HyperfitConfig HyperfitConfig::from_json(const json& j) {
  HyperfitConfig c;
  c.restarts = j.value("restarts", c.restarts);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.fit_noise = j.value("fit_noise", c.fit_noise);
  c.standardize = j.value("standardize", c.standardize);
  c.seed = j.value("seed", c.seed);
  if (c.restarts < 1) throw ValidationError("hyperfit restarts must be >= 1");
  if (c.max_iterations < 0) throw ValidationError("hyperfit max_iterations must be >= 0");
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    c.bounds.lengthscale = bounds_from(b, "lengthscale", c.bounds.lengthscale);
    c.bounds.variance = bounds_from(b, "variance", c.bounds.variance);
    c.bounds.noise = bounds_from(b, "noise", c.bounds.noise);
    c.bounds.other = bounds_from(b, "other", c.bounds.other);
    c.bounds.mean = bounds_from(b, "mean", c.bounds.mean);
  }
  return c;
}

HyperfitResult fit_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPHyperparams& family,
                               const HyperfitConfig& config) {
  if (X.rows() < 2) throw ValidationError("fit_hyperparams needs at least two observations");
  if (X.rows() != y.size()) throw ValidationError("fit_hyperparams: input and target counts differ");
  if (config.restarts < 1) throw ValidationError("fit_hyperparams: restarts must be >= 1");
  family.validate();

  const Objective obj(X, y, family, config);
  const auto dim = obj.dim();

  HyperfitResult best{family, -std::numeric_limits<double>::infinity(), 0};
  std::optional<Eigen::VectorXd> best_theta;
  for (int start = 0; start < config.restarts; ++start) {
    Eigen::VectorXd theta;
    if (start == 0) {
      theta = obj.clamp(obj.pack(family));
    } else {
      Rng rng(config.seed, {static_cast<std::uint64_t>(start)});
      theta = obj.pack(family);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double u = rng.uniform();
        // Mean coefficients keep the template value; positive parameters are
        // drawn log-uniformly inside their bounds.
        if (i < dim - static_cast<Eigen::Index>(family.mean.num_params())) {
          theta(i) = obj.lower()(i) + u * (obj.upper()(i) - obj.lower()(i));
        }
      }
      theta = obj.clamp(theta);
    }
    const auto value = obj(theta);
    if (!value) continue;
    ++best.successful_starts;
    const auto result = local_ascent(obj, theta, *value, config.max_iterations);
    if (result.f > best.log_marginal_likelihood) {
      best.log_marginal_likelihood = result.f;
      best_theta = result.theta;
    }
  }
  if (!best_theta) {
    throw NumericalError("fit_hyperparams: no start point produced a factorizable covariance");
  }
  best.hyperparams = obj.unpack(*best_theta);
  return best;
}

}  // namespace smbo
