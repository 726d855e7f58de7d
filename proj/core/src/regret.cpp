#include "smbo/regret.hpp"

#include <cmath>

#include "smbo/errors.hpp"

namespace smbo {

RegretTrace regret_trace(const std::vector<double>& y, double f_star, Direction direction) {
  if (!std::isfinite(f_star)) throw ValidationError("regret_trace: f* must be finite");
  RegretTrace trace;
  trace.f_star = f_star;
  const double sign = direction == Direction::maximize ? 1.0 : -1.0;
  double total = 0.0;
  double best_gap = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double r = sign * (f_star - y[t]);
    total += r;
    best_gap = t == 0 ? r : std::min(best_gap, r);
    trace.instantaneous.push_back(r);
    trace.cumulative.push_back(total);
    trace.simple.push_back(best_gap);
    if (r < 0.0) trace.beyond_optimum.push_back(t);
  }
  return trace;
}

RegretTrace regret_trace(const std::vector<Observation>& history, double f_star, Direction direction) {
  std::vector<double> y;
  y.reserve(history.size());
  for (const auto& o : history) y.push_back(o.y);
  return regret_trace(y, f_star, direction);
}

GpUcbResult run_gp_ucb(const DesignSpace& space, StudyConfig config, const Evaluator& evaluator, std::size_t T,
                       std::optional<double> f_star) {
  const auto expected = config.direction == Direction::maximize ? AcquisitionKind::ucb : AcquisitionKind::lcb;
  if (config.acquisition.kind != expected) {
    throw ValidationError("run_gp_ucb needs a UCB acquisition (LCB when minimizing)");
  }
  if (T < 1) throw ValidationError("run_gp_ucb: T must be >= 1");
  if (config.acquisition.beta_schedule) config.acquisition.beta_schedule->validate();
  Study study(space, config);
  run(study, evaluator, StoppingRule::with_budget(T));
  const auto inc = study.incumbent();
  GpUcbResult result{study, inc->x, inc->y, std::nullopt};
  if (f_star) result.regret = regret_trace(study.history(), *f_star, config.direction);
  return result;
}

}  // namespace smbo
