#include <gtest/gtest.h>

#include <cmath>

#include "smbo/acquisition.hpp"
#include "smbo/errors.hpp"
#include "test_support.hpp"

namespace smbo {
namespace {

// Independent high-precision values (see tests/oracles/frozen_values.py).
constexpr double kPdfAtZero = 0.39894228040143268;
constexpr double kEiUnitMean = 1.0833154705876863;  // Phi(1) + phi(1)
constexpr double kCdfAtOne = 0.84134474606854295;
constexpr double kBetaFinite = 14.810911162905765;  // 2 ln(100 pi^2 / 0.6)
constexpr double kSqrtBetaFinite = 3.8484946619302676;
constexpr double kBetaCompact = 9.6784822541326;  // 2 ln(2 pi^2 / 0.3) + 2 ln(sqrt(ln 40))

TEST(ExpectedImprovement, ZeroSigmaWithoutImprovementIsZero) {
  EXPECT_EQ(acq_ei(0.5, 0.0, 1.0), 0.0);
  EXPECT_EQ(acq_ei(1.0, 0.0, 1.0), 0.0);
}

TEST(ExpectedImprovement, ZeroSigmaUsesAnalyticLimit) { EXPECT_DOUBLE_EQ(acq_ei(1.5, 0.0, 1.0, 0.2), 0.3); }

TEST(ExpectedImprovement, AtIncumbentIsPdfAtZero) { EXPECT_NEAR(acq_ei(0.3, 1.0, 0.3), kPdfAtZero, 1e-15); }

TEST(ExpectedImprovement, UnitMeanAboveIncumbent) { EXPECT_NEAR(acq_ei(1.0, 1.0, 0.0), kEiUnitMean, 1e-15); }

TEST(ExpectedImprovement, MonotoneAndAboveImprovement) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double mu = 4 * rng.uniform() - 2, sigma = 2 * rng.uniform(), best = rng.uniform(), xi = 0.1 * rng.uniform();
    const double ei = acq_ei(mu, sigma, best, xi);
    EXPECT_GE(ei, std::max(mu - best - xi, 0.0) - 1e-15);
    EXPECT_GE(acq_ei(mu + 0.1, sigma, best, xi), ei - 1e-15);
    EXPECT_GE(acq_pi(mu + 0.1, sigma, best, xi), acq_pi(mu, sigma, best, xi) - 1e-15);
    if (mu > best + xi) EXPECT_GE(acq_ei(mu, sigma + 0.1, best, xi), ei - 1e-15);
  }
}

TEST(ExpectedImprovement, NegativeSigmaRejected) { EXPECT_THROW(acq_ei(0, -1, 0), ValidationError); }

TEST(ProbabilityOfImprovement, Examples) {
  EXPECT_DOUBLE_EQ(acq_pi(1.25, 0.5, 1.0, 0.25), 0.5);
  EXPECT_EQ(acq_pi(2.0, 0.0, 1.0, 0.1), 1.0);
  EXPECT_EQ(acq_pi(1.25, 0.0, 1.0, 0.25), 0.0);
  EXPECT_NEAR(acq_pi(1.5, 0.5, 1.0), kCdfAtOne, 1e-15);
  EXPECT_THROW(acq_pi(0, -1, 0), ValidationError);
}

TEST(ConfidenceBounds, Arithmetic) {
  EXPECT_DOUBLE_EQ(acq_ucb(1.0, 0.5, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(acq_ucb(1.0, 0.5, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(acq_lcb(1.0, 0.5, 2.0), 0.0);
  EXPECT_NEAR(acq_ucb(0.0, 1.0, std::sqrt(beta_finite(1, 100, 0.1))), kSqrtBetaFinite, 1e-14);
}

TEST(BetaSchedules, FiniteValueAndMonotonicity) {
  EXPECT_NEAR(beta_finite(1, 100, 0.1), kBetaFinite, 1e-13);
  EXPECT_GT(beta_finite(2, 100, 0.1), beta_finite(1, 100, 0.1));
  EXPECT_GT(beta_finite(5, 100, 0.05), beta_finite(5, 100, 0.1));
  EXPECT_THROW(beta_finite(1, 100, 1.0), ValidationError);
  EXPECT_THROW(beta_finite(0, 100, 0.1), ValidationError);
}

TEST(BetaSchedules, CompactValueAndGuards) {
  EXPECT_NEAR(beta_compact(1, 1, 0.1, 1, 1, 1), kBetaCompact, 1e-12);
  EXPECT_GT(beta_compact(2, 1, 0.1, 1, 1, 1), beta_compact(1, 1, 0.1, 1, 1, 1));
  EXPECT_THROW(beta_compact(1, 1, 0.5, 0.25, 1, 1), ValidationError);  // 4 d a / delta = 2 < e
  EXPECT_THROW(beta_compact(1, 1, 1.5, 1, 1, 1), ValidationError);
}

TEST(BetaSchedules, ScheduleObject) {
  BetaSchedule s;
  s.kind = BetaSchedule::Kind::finite;
  s.cardinality = 100;
  s.delta = 0.1;
  EXPECT_NEAR(s.at(1), kBetaFinite, 1e-13);
  EXPECT_EQ(BetaSchedule::from_json(s.to_json()).to_json(), s.to_json());
  BetaSchedule c;
  EXPECT_EQ(c.at(7), 2.0);
}

TEST(AcquisitionSpec, SigmaWeight) {
  AcquisitionSpec spec;
  EXPECT_EQ(spec.sigma_weight(10), 2.0);
  BetaSchedule s;
  s.kind = BetaSchedule::Kind::finite;
  s.cardinality = 100;
  s.delta = 0.1;
  spec.beta_schedule = s;
  EXPECT_NEAR(spec.sigma_weight(1), kSqrtBetaFinite, 1e-14);
}

TEST(AcquisitionSpec, ValidationAndJson) {
  AcquisitionSpec spec;
  spec.kind = AcquisitionKind::lcb;
  EXPECT_THROW(spec.validate(), ValidationError);  // LCB while maximizing
  spec.direction = Direction::minimize;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(AcquisitionSpec::from_json(spec.to_json()).to_json(), spec.to_json());
  EXPECT_THROW(AcquisitionSpec::from_json({{"kind", "EI"}, {"bogus", 1}}), ValidationError);
  EXPECT_THROW(AcquisitionSpec::from_json({{"kind", "MES"}}), ValidationError);
  EXPECT_THROW(AcquisitionSpec::from_json({{"kind", "UCB"}, {"beta", 1}, {"beta_schedule", {{"kind", "constant"}, {"value", 1}}}}),
               ValidationError);
  spec.kind = AcquisitionKind::ei;
  spec.xi = -0.1;
  EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(AcquisitionScores, DirectionSymmetry) {
  Rng rng(4);
  const Eigen::VectorXd mean = testing::normal_vector(rng, 20);
  const Eigen::VectorXd sd = testing::uniform_matrix(rng, 20, 1).col(0);
  const double best = 0.3;
  for (auto kind : {AcquisitionKind::ei, AcquisitionKind::pi}) {
    AcquisitionSpec minimize{.kind = kind, .xi = 0.05, .direction = Direction::minimize};
    AcquisitionSpec maximize{.kind = kind, .xi = 0.05, .direction = Direction::maximize};
    EXPECT_EQ(acquisition_scores(minimize, mean, sd, best, 1), acquisition_scores(maximize, -mean, sd, -best, 1));
  }
  AcquisitionSpec lcb{.kind = AcquisitionKind::lcb, .beta = 1.5, .direction = Direction::minimize};
  AcquisitionSpec ucb{.kind = AcquisitionKind::ucb, .beta = 1.5, .direction = Direction::maximize};
  EXPECT_EQ(acquisition_scores(lcb, mean, sd, best, 1), acquisition_scores(ucb, -mean, sd, -best, 1));
}

TEST(AcquisitionScores, ThompsonNeedsDraw) {
  AcquisitionSpec ts{.kind = AcquisitionKind::thompson};
  const Eigen::VectorXd m = Eigen::Vector2d(1, 2);
  EXPECT_THROW(acquisition_scores(ts, m, m, 0, 1), ValidationError);
  const Eigen::VectorXd draw = Eigen::Vector2d(5, -5);
  EXPECT_EQ(acquisition_scores(ts, m, m, 0, 1, &draw), draw);
}

TEST(Thompson, ZeroVarianceScoresAreMeans) {
  GPHyperparams hp{Kernel::rbf(1.0, {0.5}, {0})};
  hp.noise = 0.0;
  const Eigen::MatrixXd X = Eigen::Vector2d(0.1, 0.8);
  const auto model = gp_fit(X, Eigen::Vector2d(1.0, -2.0), hp, {.standardize = false});
  Rng rng(0);
  const Eigen::VectorXd scores = acq_thompson(model, X, rng);
  EXPECT_NEAR(scores(0), 1.0, 1e-6);
  EXPECT_NEAR(scores(1), -2.0, 1e-6);
  EXPECT_EQ(acq_thompson(model, X.topRows(1), rng).size(), 1);
}

TEST(Thompson, SymmetricTwoCandidateFrequencies) {
  // Two far-apart points under the prior: independent N(0, 1) marginals.
  GPHyperparams hp{Kernel::rbf(1.0, {0.01}, {0})};
  const auto prior = gp_fit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), hp);
  const Eigen::MatrixXd candidates = Eigen::Vector2d(0.0, 1.0);
  int first = 0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) {
    Rng rng(5, {static_cast<std::uint64_t>(i)});
    const Eigen::VectorXd s = acq_thompson(prior, candidates, rng);
    first += s(0) >= s(1) ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(first) / reps, 0.5, 0.03);
}

}  // namespace
}  // namespace smbo
