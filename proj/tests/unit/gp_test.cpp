#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "smbo/errors.hpp"
#include "smbo/gp.hpp"
#include "test_support.hpp"

namespace smbo {
namespace {

// Independent high-precision values (see tests/oracles/frozen_values.py).
constexpr double kMeanAtUnitDistance = 1.2130613194252668;      // 2 exp(-1/2)
constexpr double kVarianceAtUnitDistance = 0.63212055882855768;  // 1 - exp(-1)
constexpr double kLmlStandardPoint = -0.91893853320467274;       // -ln(2 pi) / 2
constexpr double kLmlNoisyPoint = -1.5155121234846454;           // -1/4 - ln 2 / 2 - ln(2 pi) / 2

const FitOptions kRaw{.standardize = false};

GPHyperparams rbf_hp(double noise = 0.0, double lengthscale = 1.0, int dim = 1) {
  std::vector<int> dims(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) dims[static_cast<std::size_t>(i)] = i;
  GPHyperparams hp{Kernel::rbf(1.0, {lengthscale}, dims)};
  hp.noise = noise;
  return hp;
}

Eigen::MatrixXd column(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

// Posterior mean and covariance through an explicit dense inverse.
struct DensePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

DensePosterior dense_posterior(const Kernel& k, double noise, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& Xq) {
  Eigen::MatrixXd K = k.matrix(X);
  K.diagonal().array() += noise;
  const Eigen::MatrixXd K_inv = K.inverse();
  const Eigen::MatrixXd Kqx = k.matrix(Xq, X);
  return {Kqx * K_inv * y, k.matrix(Xq) - Kqx * K_inv * Kqx.transpose()};
}

TEST(GpFit, SinglePointFactorIsSquareRoot) {
  const auto model = gp_fit(column({0.3}), Eigen::VectorXd::Constant(1, 1.0), rbf_hp(0.25), kRaw);
  EXPECT_NEAR(model.cholesky_factor()(0, 0), std::sqrt(1.25), 1e-15);
  EXPECT_FALSE(model.jittered());
}

TEST(GpFit, DuplicateNoiseFreeInputsNeedJitter) {
  const auto model = gp_fit(column({0.5, 0.5}), Eigen::Vector2d(1.0, 1.0), rbf_hp(0.0));
  EXPECT_TRUE(model.jittered());
  EXPECT_GT(model.jitter(), 0.0);
}

TEST(GpFit, FactorReconstructsGramMatrix) {
  Rng rng(20);
  const Eigen::MatrixXd X = testing::uniform_matrix(rng, 20, 3);
  const Eigen::VectorXd y = testing::normal_vector(rng, 20);
  const auto hp = rbf_hp(1e-4, 0.4, 3);
  const auto model = gp_fit(X, y, hp);
  Eigen::MatrixXd K = hp.kernel.matrix(X);
  K.diagonal().array() += hp.noise + model.jitter();
  const Eigen::MatrixXd L = model.cholesky_factor();
  EXPECT_LT(testing::max_relative_error(L * L.transpose(), K), 1e-8);
  EXPECT_GT(L.diagonal().minCoeff(), 0.0);
}

TEST(GpFit, StandardizationUsesPopulationDeviation) {
  const auto model = gp_fit(column({0.1, 0.9}), Eigen::Vector2d(1.0, 3.0), rbf_hp(1e-6));
  EXPECT_DOUBLE_EQ(model.transform().offset, 2.0);
  EXPECT_DOUBLE_EQ(model.transform().scale, 1.0);
  const auto flat = gp_fit(column({0.1, 0.9}), Eigen::Vector2d(4.0, 4.0), rbf_hp(1e-6));
  EXPECT_DOUBLE_EQ(flat.transform().scale, 1.0);
  EXPECT_DOUBLE_EQ(flat.transform().offset, 4.0);
}

TEST(GpFit, RejectsBadInput) {
  EXPECT_THROW(gp_fit(column({0.1, 0.2}), Eigen::VectorXd::Ones(1), rbf_hp()), ValidationError);
  EXPECT_THROW(gp_fit(column({0.1}), Eigen::VectorXd::Constant(1, NAN), rbf_hp()), ValidationError);
  EXPECT_THROW(gp_fit(column({0.1}), Eigen::VectorXd::Ones(1), rbf_hp(-1.0)), ValidationError);
}

TEST(GpPosterior, NoDataIsPrior) {
  GPHyperparams hp = rbf_hp(0.0);
  hp.mean = MeanFunction::constant(0.7);
  const auto model = gp_fit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), hp);
  const Eigen::MatrixXd Xq = column({0.0, 0.5});
  const auto post = gp_posterior(model, Xq, true);
  EXPECT_EQ(post.mean, Eigen::Vector2d(0.7, 0.7));
  EXPECT_LT((*post.covariance - hp.kernel.matrix(Xq)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GpPosterior, InterpolatesNoiseFreeObservation) {
  const auto model = gp_fit(column({0.0}), Eigen::VectorXd::Constant(1, 2.0), rbf_hp(0.0), kRaw);
  const auto post = gp_posterior(model, column({0.0}));
  EXPECT_NEAR(post.mean(0), 2.0, 1e-15);
  EXPECT_NEAR(post.variance(0), 0.0, 1e-15);
}

TEST(GpPosterior, OnePointAtUnitDistance) {
  const auto model = gp_fit(column({0.0}), Eigen::VectorXd::Constant(1, 2.0), rbf_hp(0.0), kRaw);
  const auto post = gp_posterior(model, column({1.0}));
  EXPECT_NEAR(post.mean(0), kMeanAtUnitDistance, 1e-15);
  EXPECT_NEAR(post.variance(0), kVarianceAtUnitDistance, 1e-15);
}

TEST(GpPosterior, MatchesDenseInverse) {
  Rng rng(31);
  for (int instance = 0; instance < 10; ++instance) {
    const Eigen::Index n = 5 + instance;
    const Eigen::MatrixXd X = testing::uniform_matrix(rng, n, 2);
    const Eigen::VectorXd y = testing::normal_vector(rng, n);
    const Eigen::MatrixXd Xq = testing::uniform_matrix(rng, 8, 2);
    const auto k = Kernel::matern(2.5, 1.3, {0.3, 0.5}, {0, 1});
    GPHyperparams hp{k};
    hp.noise = 1e-3;
    const auto post = gp_posterior(gp_fit(X, y, hp, kRaw), Xq, true);
    const auto dense = dense_posterior(k, hp.noise, X, y, Xq);
    EXPECT_LT(testing::max_relative_error(post.mean, dense.mean), 1e-8);
    EXPECT_LT(testing::max_relative_error(*post.covariance, dense.cov), 1e-8);
  }
}

TEST(GpPosterior, StandardizationIsInvertedOnPrediction) {
  Rng rng(2);
  const Eigen::MatrixXd X = testing::uniform_matrix(rng, 6, 1);
  const Eigen::VectorXd y = (10.0 * testing::normal_vector(rng, 6)).array() + 100.0;
  const auto hp = rbf_hp(1e-6, 0.05);
  const auto model = gp_fit(X, y, hp);
  const auto post = gp_posterior(model, X);
  EXPECT_LT((post.mean - y).cwiseAbs().maxCoeff(), 1e-3);
  // Variance at noise-free training inputs stays at jitter scale.
  EXPECT_LT(post.variance.maxCoeff() / (model.transform().scale * model.transform().scale), 1e-5);
}

TEST(GpPosterior, VarianceNeverNegativeAndShrinks) {
  Rng rng(44);
  for (int instance = 0; instance < 10; ++instance) {
    const Eigen::MatrixXd X = testing::uniform_matrix(rng, 9, 2);
    const Eigen::VectorXd y = testing::normal_vector(rng, 9);
    const Eigen::MatrixXd Xq = testing::uniform_matrix(rng, 30, 2);
    const auto hp = rbf_hp(1e-4, 0.3, 2);
    const auto small = gp_posterior(gp_fit(X.topRows(8), y.head(8), hp, kRaw), Xq);
    const auto large = gp_posterior(gp_fit(X, y, hp, kRaw), Xq);
    EXPECT_GE(large.variance.minCoeff(), 0.0);
    EXPECT_LE((large.variance - small.variance).maxCoeff(), 1e-8);
  }
}

TEST(GpPosterior, DimensionMismatchRejected) {
  const auto model = gp_fit(column({0.0}), Eigen::VectorXd::Ones(1), rbf_hp());
  EXPECT_THROW(gp_posterior(model, Eigen::MatrixXd::Zero(1, 2)), ValidationError);
}

TEST(ConditionGeneral, IndependentEvidenceLeavesPrior) {
  JointGaussian j{Eigen::Vector2d(0.1, 0.2), Eigen::Vector2d(1.0, -1.0), Eigen::Matrix2d::Identity(),
                  Eigen::Matrix2d::Zero(), Eigen::Matrix2d{{2.0, 0.5}, {0.5, 1.0}}};
  const auto post = gp_condition_general(j, Eigen::Vector2d(3.0, -4.0));
  EXPECT_EQ(post.mean, j.mean_f);
  EXPECT_EQ(*post.covariance, j.cov_ff);
}

TEST(ConditionGeneral, PerfectCorrelation) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  JointGaussian j{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), one, one, one};
  const auto post = gp_condition_general(j, Eigen::VectorXd::Constant(1, 0.7));
  EXPECT_NEAR(post.mean(0), 0.7, 1e-15);
  EXPECT_NEAR(post.variance(0), 0.0, 1e-15);
}

TEST(ConditionGeneral, ReproducesGpPosterior) {
  Rng rng(10);
  for (int instance = 0; instance < 10; ++instance) {
    const Eigen::MatrixXd X = testing::uniform_matrix(rng, 10, 2);
    const Eigen::VectorXd y = testing::normal_vector(rng, 10);
    const Eigen::MatrixXd Xq = testing::uniform_matrix(rng, 6, 2);
    const auto hp = rbf_hp(1e-2, 0.4, 2);
    JointGaussian j;
    j.mean_z = Eigen::VectorXd::Zero(10);
    j.mean_f = Eigen::VectorXd::Zero(6);
    j.cov_zz = hp.kernel.matrix(X);
    j.cov_zz.diagonal().array() += hp.noise;
    j.cov_zf = hp.kernel.matrix(X, Xq);
    j.cov_ff = hp.kernel.matrix(Xq);
    const auto general = gp_condition_general(j, y);
    const auto direct = gp_posterior(gp_fit(X, y, hp, kRaw), Xq, true);
    EXPECT_LT((general.mean - direct.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((*general.covariance - *direct.covariance).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ConditionGeneral, ShapeMismatchRejected) {
  JointGaussian j{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1), Eigen::Matrix2d::Identity(),
                  Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1)};
  EXPECT_THROW(gp_condition_general(j, Eigen::Vector2d::Zero()), ValidationError);
}

TEST(LogMarginalLikelihood, StandardNormalPoint) {
  const auto model = gp_fit(column({0.0}), Eigen::VectorXd::Zero(1), rbf_hp(0.0), kRaw);
  EXPECT_NEAR(log_marginal_likelihood(model), kLmlStandardPoint, 1e-15);
}

TEST(LogMarginalLikelihood, NoisyPoint) {
  const auto model = gp_fit(column({0.0}), Eigen::VectorXd::Ones(1), rbf_hp(1.0), kRaw);
  EXPECT_NEAR(log_marginal_likelihood(model), kLmlNoisyPoint, 1e-15);
}

TEST(LogMarginalLikelihood, ConstantMeanTranslationIdentity) {
  Rng rng(4);
  const Eigen::MatrixXd X = testing::uniform_matrix(rng, 8, 1);
  const Eigen::VectorXd y = testing::normal_vector(rng, 8);
  const double c = 3.25;
  GPHyperparams shifted = rbf_hp(1e-3, 0.3);
  shifted.mean = MeanFunction::constant(c);
  const double base = log_marginal_likelihood(gp_fit(X, y, rbf_hp(1e-3, 0.3), kRaw));
  const double moved = log_marginal_likelihood(gp_fit(X, (y.array() + c).matrix(), shifted, kRaw));
  EXPECT_NEAR(moved, base, 1e-12);
}

TEST(LogMarginalLikelihood, GradientMatchesCentralDifferences) {
  Rng rng(12);
  const Eigen::MatrixXd X = testing::uniform_matrix(rng, 15, 2);
  const Eigen::VectorXd y = testing::normal_vector(rng, 15);
  GPHyperparams hp{Kernel::rbf(1.4, {0.3, 0.6}, {0, 1}) + Kernel::linear(0.2, {0})};
  hp.noise = 0.05;
  hp.mean = MeanFunction::linear({0.3, -0.2});
  const Eigen::VectorXd g = log_marginal_likelihood_gradient(gp_fit(X, y, hp));
  const auto k = static_cast<Eigen::Index>(hp.kernel.num_params());
  ASSERT_EQ(g.size(), k + 1 + 2);

  auto lml_at = [&](Eigen::Index i, double step) {
    GPHyperparams p = hp;
    if (i < k) {
      Eigen::VectorXd v = p.kernel.params();
      v(i) *= std::exp(step);
      p.kernel.set_params(v);
    } else if (i == k) {
      p.noise *= std::exp(step);
    } else {
      Eigen::VectorXd m = p.mean.params();
      m(i - k - 1) += step;
      p.mean.set_params(m);
    }
    return log_marginal_likelihood(gp_fit(X, y, p));
  };
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double fd = (lml_at(i, h) - lml_at(i, -h)) / (2 * h);
    EXPECT_LE(std::abs(fd - g(i)), 1e-4 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

TEST(SamplePosterior, ZeroVarianceReturnsMean) {
  const auto model = gp_fit(column({0.0, 1.0}), Eigen::Vector2d(1.0, -1.0), rbf_hp(0.0), kRaw);
  Rng rng(0);
  const auto draws = sample_posterior(model, column({0.0, 1.0}), rng, 3);
  const auto post = gp_posterior(model, column({0.0, 1.0}));
  for (const auto& d : draws) EXPECT_LT((d - post.mean).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SamplePosterior, MonteCarloMoments) {
  const auto prior = gp_fit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), rbf_hp(0.0));
  Rng rng(99);
  const auto draws = sample_posterior(prior, column({0.3}), rng, 100000);
  double sum = 0.0, sq = 0.0;
  for (const auto& d : draws) {
    sum += d(0);
    sq += d(0) * d(0);
  }
  const double mean = sum / static_cast<double>(draws.size());
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(sq / static_cast<double>(draws.size()) - mean * mean, 1.0, 0.05);
}

TEST(SamplePosterior, SeededDrawsRepeat) {
  const auto model = gp_fit(column({0.2}), Eigen::VectorXd::Ones(1), rbf_hp(0.1));
  Rng a(5), b(5);
  const Eigen::MatrixXd Xq = column({0.0, 0.4, 0.9});
  const auto da = sample_posterior(model, Xq, a, 4);
  const auto db = sample_posterior(model, Xq, b, 4);
  for (std::size_t i = 0; i < da.size(); ++i) EXPECT_EQ(da[i], db[i]);
}

TEST(BlrPredict, ZeroPriorCovarianceIsZero) {
  const auto post = blr_predict(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Zero(1, 1), 1.0,
                                Eigen::Vector2d(3.0, 4.0), Eigen::MatrixXd::Ones(1, 1));
  EXPECT_EQ(post.mean(0), 0.0);
  EXPECT_EQ(post.variance(0), 0.0);
}

TEST(BlrPredict, ScalarExample) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  const auto post = blr_predict(one, one, 1.0, Eigen::VectorXd::Constant(1, 2.0), one);
  EXPECT_NEAR(post.mean(0), 1.0, 1e-15);
  EXPECT_NEAR(post.variance(0), 0.5, 1e-15);
}

TEST(BlrPredict, SingularSystemRejected) {
  EXPECT_THROW(blr_predict(Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(1, 1), 0.0, Eigen::Vector2d(1, 2),
                           Eigen::MatrixXd::Ones(1, 1)),
               NumericalError);
}

TEST(BlrPredict, AgreesWithGpUnderLinearKernel) {
  Rng rng(17);
  for (int instance = 0; instance < 10; ++instance) {
    const Eigen::MatrixXd Phi = testing::uniform_matrix(rng, 12, 3);
    const Eigen::MatrixXd Phi_q = testing::uniform_matrix(rng, 4, 3);
    const Eigen::VectorXd y = testing::normal_vector(rng, 12);
    const double noise = 0.1;
    const auto blr = blr_predict(Phi, Eigen::MatrixXd::Identity(3, 3), noise, y, Phi_q);
    // phi^T I phi' is the linear kernel with zero bias.
    GPHyperparams hp{Kernel::linear(1e-300, {0, 1, 2})};
    hp.noise = noise;
    const auto gp = gp_posterior(gp_fit(Phi, y, hp, kRaw), Phi_q);
    EXPECT_LT((blr.mean - gp.mean).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((blr.variance - gp.variance).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Hyperparams, JsonRoundTrip) {
  GPHyperparams hp{Kernel::rbf(1.2, {0.3}, {0})};
  hp.mean = MeanFunction::constant(0.4);
  hp.noise = 0.01;
  const auto back = GPHyperparams::from_json(hp.to_json());
  EXPECT_EQ(back.to_json(), hp.to_json());
}

}  // namespace
}  // namespace smbo
