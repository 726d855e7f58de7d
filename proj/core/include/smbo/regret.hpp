#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "smbo/acquisition.hpp"
#include "smbo/study.hpp"

namespace smbo {

/// Regret of an observation sequence against a reference optimum f*.
/// Observed y stands in for f(x_t). Under minimization the roles flip:
/// r_t = y_t - f*.
struct RegretTrace {
  double f_star = 0.0;
  std::vector<double> instantaneous;
  std::vector<double> cumulative;
  std::vector<double> simple;
  /// 0-based indices whose value beats f* (noise, or a stale optimum);
  /// their instantaneous regret is negative.
  std::vector<std::size_t> beyond_optimum;

  std::size_t size() const { return instantaneous.size(); }
  bool flagged() const { return !beyond_optimum.empty(); }
  /// R_t / t for 1-based t.
  double average(std::size_t t) const { return cumulative.at(t - 1) / static_cast<double>(t); }
};

RegretTrace regret_trace(const std::vector<double>& y, double f_star, Direction direction = Direction::maximize);
RegretTrace regret_trace(const std::vector<Observation>& history, double f_star,
                         Direction direction = Direction::maximize);

struct GpUcbResult {
  Study study;
  /// Best observed point and value (x* of the GP-UCB loop).
  DesignPoint best_x;
  double best_y = 0.0;
  /// Present when f* was supplied.
  std::optional<RegretTrace> regret;
};

/// GP-UCB: T evaluations (initial design included) selecting
/// argmax mu + sqrt(beta_t) sigma over the configured pool. The config's
/// acquisition must be UCB (LCB when minimizing), normally with a beta
/// schedule; a plain beta is used as the sigma multiplier as is.
GpUcbResult run_gp_ucb(const DesignSpace& space, StudyConfig config, const Evaluator& evaluator, std::size_t T,
                       std::optional<double> f_star = std::nullopt);

}  // namespace smbo
