#pragma once

#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smbo/kernel.hpp"
#include "smbo/mean.hpp"
#include "smbo/random.hpp"

namespace smbo {

/// Kernel, mean and observation-noise variance of a GP surrogate.
struct GPHyperparams {
  Kernel kernel;
  MeanFunction mean = MeanFunction::zero();
  double noise = 1e-6;

  void validate() const;
  nlohmann::json to_json() const;
  static GPHyperparams from_json(const nlohmann::json& j);
};

/// Affine map from raw targets to the scale the GP is fitted on:
/// y_scaled = (y - offset) / scale.
struct TargetTransform {
  double offset = 0.0;
  double scale = 1.0;
};

struct FitOptions {
  /// Subtract the empirical mean and divide by the empirical (population)
  /// standard deviation; a deviation below 1e-12 falls back to 1.
  bool standardize = true;
  /// Use this transform verbatim instead of estimating one (fantasy refits).
  std::optional<TargetTransform> transform;
};

/// Predictive distribution at a set of query points, on the raw target scale.
struct PosteriorGaussian {
  Eigen::VectorXd mean;
  /// Marginal variances, clamped at zero.
  Eigen::VectorXd variance;
  /// Present only when the full covariance was requested.
  std::optional<Eigen::MatrixXd> covariance;

  Eigen::VectorXd stddev() const { return variance.array().sqrt(); }
};

/// A GP conditioned on data: training inputs (rows, embedded coordinates),
/// targets, the Cholesky factor of K + noise*I (+ jitter*I) and the weights
/// alpha = (K + noise*I)^-1 (y_scaled - m(X)). Immutable once fitted.
class GPModel {
 public:
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::VectorXd& scaled_targets() const { return scaled_; }
  /// y_scaled - m(X).
  const Eigen::VectorXd& residuals() const { return residuals_; }
  const TargetTransform& transform() const { return transform_; }
  const GPHyperparams& hyperparams() const { return hyperparams_; }
  const Eigen::LLT<Eigen::MatrixXd>& factorization() const { return llt_; }
  Eigen::MatrixXd cholesky_factor() const { return llt_.matrixL(); }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// Diagonal jitter that was needed for a stable factorization (0 if none).
  double jitter() const { return jitter_; }
  bool jittered() const { return jitter_ > 0.0; }
  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index dim() const { return inputs_.cols(); }

 private:
  friend GPModel gp_fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const GPHyperparams&, const FitOptions&);
  explicit GPModel(GPHyperparams hp) : hyperparams_(std::move(hp)) {}

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::VectorXd scaled_;
  Eigen::VectorXd residuals_;
  TargetTransform transform_;
  GPHyperparams hyperparams_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Conditions the GP on (X, y). Zero rows yields the prior.
/// Throws NumericalError if K + noise*I cannot be factorized even with
/// maximal jitter, ValidationError on shape mismatch or non-finite targets.
GPModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPHyperparams& hp,
               const FitOptions& options = {});

/// Posterior mean and (co)variance at the rows of Xq.
PosteriorGaussian gp_posterior(const GPModel& model, const Eigen::MatrixXd& Xq, bool full_cov = false);

/// log p(y | X, hyperparameters) on the scaled targets.
double log_marginal_likelihood(const GPModel& model);

/// Gradient of log_marginal_likelihood with respect to
/// [log kernel params..., log noise (if included), mean params...].
Eigen::VectorXd log_marginal_likelihood_gradient(const GPModel& model, bool include_noise = true);

/// Jointly Gaussian (z, f) with block covariance [[K_zz, K_zf], [K_fz, K_ff]].
struct JointGaussian {
  Eigen::VectorXd mean_z;
  Eigen::VectorXd mean_f;
  Eigen::MatrixXd cov_zz;
  /// Cross-covariance K_zf, |z| x |f|.
  Eigen::MatrixXd cov_zf;
  Eigen::MatrixXd cov_ff;
};

/// Distribution of f given an observed value of z.
PosteriorGaussian gp_condition_general(const JointGaussian& joint, const Eigen::VectorXd& z_observed);

/// `count` joint draws mean + L xi at the rows of Xq, L the (jittered)
/// Cholesky factor of the posterior covariance. Zero covariance returns the
/// mean exactly.
std::vector<Eigen::VectorXd> sample_posterior(const GPModel& model, const Eigen::MatrixXd& Xq, Rng& rng,
                                              std::size_t count);

/// Bayesian linear regression y = Phi w + eps, w ~ N(0, Sigma_w),
/// eps ~ N(0, noise I); predictive distribution of the noise-free response
/// at the query feature rows. Throws NumericalError if
/// Phi Sigma_w Phi^T + noise I is singular.
PosteriorGaussian blr_predict(const Eigen::MatrixXd& features, const Eigen::MatrixXd& weight_cov, double noise,
                              const Eigen::VectorXd& y, const Eigen::MatrixXd& query_features);

}  // namespace smbo
