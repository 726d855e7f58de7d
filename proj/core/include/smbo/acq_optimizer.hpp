#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smbo/acquisition.hpp"
#include "smbo/design_space.hpp"
#include "smbo/gp.hpp"
#include "smbo/random.hpp"

namespace smbo {

/// How the acquisition is maximized over the design space: a full grid, a
/// uniform random pool, or a random pool whose best members are refined by
/// Gaussian perturbations in the unit cube.
struct SearchStrategy {
  enum class Kind { grid, random, random_plus_local };
  Kind kind = Kind::random_plus_local;
  /// Grid points per continuous parameter (discrete parameters use at most
  /// their own number of values).
  std::size_t resolution = 21;
  std::size_t pool_size = 1000;
  /// random_plus_local: how many of the best pool points are perturbed and
  /// how many perturbations each receives.
  std::size_t local_top = 5;
  std::size_t perturbations = 20;
  double local_scale = 0.05;

  void validate() const;
  nlohmann::json to_json() const;
  static SearchStrategy from_json(const nlohmann::json& j);
};

/// Candidate rows (canonical embedded points, i.e. decoded then re-embedded)
/// before any local refinement. Grid order is lexicographic over parameters.
Eigen::MatrixXd candidate_pool(const DesignSpace& space, const SearchStrategy& strategy, Rng& rng);

struct ScoredPoint {
  DesignPoint point;
  Eigen::VectorXd embedded;
  /// Acquisition utility (larger is better).
  double score = 0.0;
  /// Posterior mean and standard deviation on the raw target scale.
  double mean = 0.0;
  double stddev = 0.0;
};

/// Where the acquisition is being evaluated: incumbent value (raw scale;
/// only EI/PI read it) and the 1-based iteration for beta schedules.
struct AcquisitionContext {
  double y_best = 0.0;
  std::size_t t = 1;
};

/// Scores every row of `pool` under the model.
std::vector<ScoredPoint> score_candidates(const GPModel& model, const DesignSpace& space, const Eigen::MatrixXd& pool,
                                          const AcquisitionSpec& spec, const AcquisitionContext& ctx, Rng& rng);

enum class FantasyPolicy { posterior_mean, constant };

/// Refits the model (same hyperparameters and target transform, no
/// re-optimization) on its data plus (x, y_hat), where y_hat is the posterior
/// mean at x or `value` for the constant policy. Never mutates `model`.
GPModel fantasize(const GPModel& model, const Eigen::VectorXd& x_embedded,
                  FantasyPolicy policy = FantasyPolicy::posterior_mean, double value = 0.0);
GPModel fantasize(const GPModel& model, const DesignSpace& space, const DesignPoint& x,
                  FantasyPolicy policy = FantasyPolicy::posterior_mean, double value = 0.0);

/// Returns q points ordered by selection. For q = 1 this is the argmax over
/// the (possibly locally refined) pool with the lowest index winning ties.
/// For q > 1 each pick is followed by a posterior-mean fantasy and the pool
/// is re-scored with already chosen points excluded; duplicates appear only
/// when the pool has fewer than q distinct points. Scores are those seen at
/// selection time.
std::vector<ScoredPoint> maximize_acquisition(const GPModel& model, const DesignSpace& space,
                                              const AcquisitionSpec& spec, const SearchStrategy& strategy,
                                              std::size_t q, Rng& rng, const AcquisitionContext& ctx = {});

/// The pool that maximize_acquisition scores (random pool plus local
/// refinements); exposed so that slates and recommendations share it.
Eigen::MatrixXd refined_pool(const GPModel& model, const DesignSpace& space, const AcquisitionSpec& spec,
                             const SearchStrategy& strategy, Rng& rng, const AcquisitionContext& ctx);

/// Indices of `scores` sorted by decreasing score, ties by increasing index.
std::vector<std::size_t> rank_descending(const std::vector<ScoredPoint>& scored);

}  // namespace smbo
