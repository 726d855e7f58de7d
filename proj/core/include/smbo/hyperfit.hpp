#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smbo/gp.hpp"

namespace smbo {

/// Box constraints for hyperparameter search. Positive parameters are
/// searched in log space; mean coefficients on their natural scale.
struct HyperBounds {
  std::pair<double, double> lengthscale{1e-2, 1e2};
  std::pair<double, double> variance{1e-2, 1e2};
  std::pair<double, double> noise{1e-6, 1.0};
  /// Periods, linear-kernel bias and categorical overlap weights.
  std::pair<double, double> other{1e-2, 1e2};
  std::pair<double, double> mean{-1e2, 1e2};
};

struct HyperfitConfig {
  /// Number of local ascents. The first starts from the template's own
  /// parameters (clamped to the bounds), the rest from log-uniform draws.
  int restarts = 8;
  int max_iterations = 100;
  HyperBounds bounds;
  /// When false the template's noise variance is kept fixed.
  bool fit_noise = true;
  bool standardize = true;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static HyperfitConfig from_json(const nlohmann::json& j);
};

struct HyperfitResult {
  GPHyperparams hyperparams;
  double log_marginal_likelihood = 0.0;
  /// Starts whose initial point could be factorized.
  int successful_starts = 0;
};

/// Maximizes the log marginal likelihood over kernel parameters, noise
/// variance and mean coefficients with projected gradient ascent (Armijo
/// backtracking, Barzilai-Borwein step lengths) from several starts. Every
/// accepted step increases the objective, so the result is never worse than
/// any start point. Scale-node coefficients in the kernel are not fitted.
///
/// Throws ValidationError for fewer than two observations and NumericalError
/// when no start point can be factorized.
HyperfitResult fit_hyperparams(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPHyperparams& family,
                               const HyperfitConfig& config = {});

}  // namespace smbo
