#include "smbo/gp.hpp"

#include <cmath>
#include <numbers>

#include "linalg.hpp"
#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

void GPHyperparams::validate() const {
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("noise variance must be finite and >= 0");
}

json GPHyperparams::to_json() const {
  return {{"kernel", kernel.to_json()}, {"mean", mean.to_json()}, {"noise", noise}};
}

GPHyperparams GPHyperparams::from_json(const json& j) {
  GPHyperparams hp{Kernel::from_json(j.at("kernel"))};
  if (j.contains("mean")) hp.mean = MeanFunction::from_json(j.at("mean"));
  hp.noise = j.value("noise", 1e-6);
  hp.validate();
  return hp;
}

GPModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPHyperparams& hp,
               const FitOptions& options) {
  hp.validate();
  if (X.rows() != y.size()) throw ValidationError("gp_fit: input and target counts differ");
  if (!y.allFinite()) throw ValidationError("gp_fit: targets must be finite");
  if (X.rows() > 0 && X.cols() < hp.kernel.required_dim()) {
    throw ValidationError("gp_fit: inputs have fewer columns than the kernel addresses");
  }

  GPModel model(hp);
  model.inputs_ = X;
  model.targets_ = y;
  const auto n = y.size();

  if (options.transform) {
    model.transform_ = *options.transform;
  } else if (options.standardize && n > 0) {
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().mean());
    model.transform_ = {mean, sd < 1e-12 ? 1.0 : sd};
  }
  model.scaled_ = (y.array() - model.transform_.offset) / model.transform_.scale;
  model.residuals_ = model.scaled_ - hp.mean(X);

  if (n == 0) {
    model.alpha_ = Eigen::VectorXd(0);
    return model;
  }
  Eigen::MatrixXd K = hp.kernel.matrix(X);
  K.diagonal().array() += hp.noise;
  auto chol = detail::jittered_cholesky(K);
  model.llt_ = std::move(chol.llt);
  model.jitter_ = chol.jitter;
  model.alpha_ = model.llt_.solve(model.residuals_);
  return model;
}

PosteriorGaussian gp_posterior(const GPModel& model, const Eigen::MatrixXd& Xq, bool full_cov) {
  const auto& hp = model.hyperparams();
  if (model.size() > 0 && Xq.cols() != model.dim()) {
    throw ValidationError("gp_posterior: query dimension does not match training inputs");
  }
  PosteriorGaussian post;
  Eigen::VectorXd mean = hp.mean(Xq);
  Eigen::MatrixXd cov;
  Eigen::VectorXd var;
  if (full_cov) {
    cov = hp.kernel.matrix(Xq);
  } else {
    var = hp.kernel.diagonal(Xq);
  }
  if (model.size() > 0) {
    const Eigen::MatrixXd Kqx = hp.kernel.matrix(Xq, model.inputs());
    mean.noalias() += Kqx * model.alpha();
    const Eigen::MatrixXd V = model.factorization().matrixL().solve(Kqx.transpose());
    if (full_cov) {
      cov.noalias() -= V.transpose() * V;
    } else {
      var -= V.colwise().squaredNorm().transpose();
    }
  }
  const auto& t = model.transform();
  post.mean = t.offset + t.scale * mean.array();
  const double s2 = t.scale * t.scale;
  if (full_cov) {
    cov = 0.5 * (cov + cov.transpose()) * s2;
    post.variance = cov.diagonal().cwiseMax(0.0);
    cov.diagonal() = post.variance;
    post.covariance = std::move(cov);
  } else {
    post.variance = (var * s2).cwiseMax(0.0);
  }
  return post;
}

double log_marginal_likelihood(const GPModel& model) {
  const auto n = model.size();
  if (n == 0) return 0.0;
  const Eigen::VectorXd& r = model.residuals();
  const double quad = r.dot(model.alpha());
  const double log_det = 2.0 * model.factorization().matrixLLT().diagonal().array().log().sum();
  return -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd log_marginal_likelihood_gradient(const GPModel& model, bool include_noise) {
  const auto& hp = model.hyperparams();
  const auto n = model.size();
  const auto n_kernel = static_cast<Eigen::Index>(hp.kernel.num_params());
  const auto n_mean = static_cast<Eigen::Index>(hp.mean.num_params());
  const Eigen::Index total = n_kernel + (include_noise ? 1 : 0) + n_mean;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(total);
  if (n == 0) return grad;

  const Eigen::VectorXd& a = model.alpha();
  const Eigen::MatrixXd K_inv = model.factorization().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd W = a * a.transpose() - K_inv;

  const auto dK = hp.kernel.log_gradients(model.inputs());
  for (Eigen::Index i = 0; i < n_kernel; ++i) grad(i) = 0.5 * (W.array() * dK[static_cast<std::size_t>(i)].array()).sum();
  Eigen::Index pos = n_kernel;
  if (include_noise) grad(pos++) = 0.5 * hp.noise * W.trace();
  if (n_mean > 0) grad.segment(pos, n_mean) = hp.mean.jacobian(model.inputs()).transpose() * a;
  return grad;
}

PosteriorGaussian gp_condition_general(const JointGaussian& j, const Eigen::VectorXd& z) {
  const auto nz = j.mean_z.size();
  const auto nf = j.mean_f.size();
  if (j.cov_zz.rows() != nz || j.cov_zz.cols() != nz || j.cov_zf.rows() != nz || j.cov_zf.cols() != nf ||
      j.cov_ff.rows() != nf || j.cov_ff.cols() != nf || z.size() != nz) {
    throw ValidationError("gp_condition_general: block shapes are inconsistent");
  }
  PosteriorGaussian post;
  Eigen::MatrixXd cov = j.cov_ff;
  post.mean = j.mean_f;
  if (nz > 0) {
    const auto chol = detail::jittered_cholesky(j.cov_zz);
    post.mean.noalias() += j.cov_zf.transpose() * chol.llt.solve(z - j.mean_z);
    const Eigen::MatrixXd V = chol.llt.matrixL().solve(j.cov_zf);
    cov.noalias() -= V.transpose() * V;
  }
  cov = 0.5 * (cov + cov.transpose());
  post.variance = cov.diagonal().cwiseMax(0.0);
  cov.diagonal() = post.variance;
  post.covariance = std::move(cov);
  return post;
}

std::vector<Eigen::VectorXd> sample_posterior(const GPModel& model, const Eigen::MatrixXd& Xq, Rng& rng,
                                              std::size_t count) {
  if (Xq.rows() == 0) throw ValidationError("sample_posterior: need at least one query point");
  const auto post = gp_posterior(model, Xq, true);
  const Eigen::MatrixXd& cov = *post.covariance;
  const auto m = Xq.rows();
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(count);
  const bool degenerate = cov.cwiseAbs().maxCoeff() == 0.0;
  Eigen::MatrixXd L;
  if (!degenerate) L = detail::jittered_cholesky(cov).llt.matrixL();
  Eigen::VectorXd xi(m);
  for (std::size_t s = 0; s < count; ++s) {
    if (degenerate) {
      draws.push_back(post.mean);
      continue;
    }
    for (Eigen::Index i = 0; i < m; ++i) xi(i) = rng.normal();
    draws.push_back(post.mean + L.triangularView<Eigen::Lower>() * xi);
  }
  return draws;
}

PosteriorGaussian blr_predict(const Eigen::MatrixXd& Phi, const Eigen::MatrixXd& Sw, double noise,
                              const Eigen::VectorXd& y, const Eigen::MatrixXd& Phi_q) {
  const auto d = Phi.cols();
  if (Sw.rows() != d || Sw.cols() != d || Phi_q.cols() != d || y.size() != Phi.rows()) {
    throw ValidationError("blr_predict: inconsistent shapes");
  }
  if (!(noise >= 0.0)) throw ValidationError("blr_predict: noise must be >= 0");
  Eigen::MatrixXd C = Phi * Sw * Phi.transpose();
  C.diagonal().array() += noise;
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
    throw NumericalError("blr_predict: Phi Sigma_w Phi^T + noise I is singular");
  }
  const Eigen::MatrixXd cross = Phi_q * Sw * Phi.transpose();  // m x n
  PosteriorGaussian post;
  post.mean = cross * llt.solve(y);
  Eigen::MatrixXd cov = Phi_q * Sw * Phi_q.transpose() - cross * llt.solve(cross.transpose());
  cov = 0.5 * (cov + cov.transpose());
  post.variance = cov.diagonal().cwiseMax(0.0);
  cov.diagonal() = post.variance;
  post.covariance = std::move(cov);
  return post;
}

}  // namespace smbo
