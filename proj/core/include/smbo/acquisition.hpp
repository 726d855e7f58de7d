#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smbo/design_space.hpp"
#include "smbo/gp.hpp"
#include "smbo/random.hpp"

namespace smbo {

enum class Direction { maximize, minimize };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

/// True when a is strictly better than b under the direction.
inline bool better(Direction d, double a, double b) { return d == Direction::maximize ? a > b : a < b; }

double normal_pdf(double z);
double normal_cdf(double z);

/// Expected improvement of a Gaussian N(mu, sigma^2) over y_best + xi.
/// At sigma = 0 this is the analytic limit max(mu - y_best - xi, 0).
double acq_ei(double mu, double sigma, double y_best, double xi = 0.0);
/// Probability of improving on y_best + xi; at sigma = 0 the indicator of a
/// strict improvement.
double acq_pi(double mu, double sigma, double y_best, double xi = 0.0);
/// mu + beta * sigma.
double acq_ucb(double mu, double sigma, double beta = 2.0);
/// mu - beta * sigma, the optimistic bound for minimization.
double acq_lcb(double mu, double sigma, double beta = 2.0);
/// One joint posterior draw over the candidate rows; the argmax is the
/// Thompson-sampling choice.
Eigen::VectorXd acq_thompson(const GPModel& model, const Eigen::MatrixXd& candidates, Rng& rng);

/// 2 ln(|X| t^2 pi^2 / (6 delta)) for finite design spaces.
double beta_finite(double t, double cardinality, double delta);
/// 2 ln(2 t^2 pi^2 / (3 delta)) + 2 d ln(t^2 d b r sqrt(ln(4 d a / delta)))
/// for compact convex design spaces; a, b and r are caller-supplied.
/// Requires 4 d a / delta > e.
double beta_compact(double t, double d, double delta, double a, double b, double r);

/// Exploration weight that may grow with the iteration count.
struct BetaSchedule {
  enum class Kind { constant, finite, compact };
  Kind kind = Kind::constant;
  double value = 2.0;  // constant
  double cardinality = 1.0;  // finite
  double delta = 0.1;  // finite, compact
  double dim = 1.0, a = 1.0, b = 1.0, r = 1.0;  // compact

  /// beta_t for iteration t >= 1.
  double at(std::size_t t) const;
  void validate() const;
  nlohmann::json to_json() const;
  static BetaSchedule from_json(const nlohmann::json& j);
};

enum class AcquisitionKind { ei, pi, ucb, lcb, thompson };

std::string to_string(AcquisitionKind k);
AcquisitionKind acquisition_kind_from_string(const std::string& s);

/// Which acquisition to maximize and how.
///
/// Scores are utilities: larger is always better regardless of direction.
/// Under minimization EI/PI/UCB/Thompson act on -f, and LCB's utility is the
/// negated lower bound, so minimizing f with LCB and maximizing -f with UCB
/// score identically. UCB/LCB use beta * sigma with a plain beta, or
/// sqrt(beta_t) * sigma when a schedule is configured.
struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::ucb;
  double xi = 0.0;
  double beta = 2.0;
  std::optional<BetaSchedule> beta_schedule;
  Direction direction = Direction::maximize;

  /// Multiplier applied to sigma for UCB/LCB at iteration t.
  double sigma_weight(std::size_t t) const;
  void validate() const;
  nlohmann::json to_json() const;
  static AcquisitionSpec from_json(const nlohmann::json& j);
};

/// Best observation under the study direction.
struct Incumbent {
  DesignPoint x;
  double y = 0.0;
  std::size_t index = 0;
};

/// Utilities for the given posterior marginals. `y_best` is the incumbent
/// value on the raw scale (ignored by UCB/LCB/Thompson), `t` the 1-based
/// iteration for beta schedules. Thompson needs `draw`: one joint sample of
/// f at the same points.
Eigen::VectorXd acquisition_scores(const AcquisitionSpec& spec, const Eigen::VectorXd& mean,
                                   const Eigen::VectorXd& stddev, double y_best, std::size_t t,
                                   const Eigen::VectorXd* draw = nullptr);

}  // namespace smbo
