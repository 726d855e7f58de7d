// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "smbo/acquisition.hpp"
#include "smbo/bench.hpp"
#include "smbo/gp.hpp"
#include "smbo/regret.hpp"
#include "smbo/service.hpp"
#include "smbo/simplex.hpp"
#include "smbo/study.hpp"

namespace {

using namespace smbo;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

const FitOptions kRaw{.standardize = false};

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

std::vector<int> all_dims(int d) {
  std::vector<int> dims(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) dims[static_cast<std::size_t>(i)] = i;
  return dims;
}

std::vector<double> lengthscales(Rng& rng, int d) {
  std::vector<double> ls(static_cast<std::size_t>(d));
  for (auto& l : ls) l = 0.2 + 0.8 * rng.uniform();
  return ls;
}

// A kernel from a rotating family: stationary, dot-product, periodic and
// composite forms over d input dimensions.
Kernel mixed_kernel(int instance, Rng& rng, int d) {
  const auto dims = all_dims(d);
  switch (instance % 6) {
    case 0:
      return Kernel::rbf(0.5 + rng.uniform(), lengthscales(rng, d), dims);
    case 1:
      return Kernel::matern(0.5, 0.5 + rng.uniform(), lengthscales(rng, d), dims);
    case 2:
      return Kernel::matern(1.5, 0.5 + rng.uniform(), lengthscales(rng, d), dims) + Kernel::linear(0.1, dims);
    case 3:
      return Kernel::matern(2.5, 0.5 + rng.uniform(), lengthscales(rng, d), dims) *
             Kernel::periodic(1.0, 0.7, 0.5 + rng.uniform(), 0);
    case 4:
      return Kernel::scale(2.0, Kernel::rbf(1.0, lengthscales(rng, d), dims));
    default:
      return Kernel::sum({Kernel::rbf(1.0, lengthscales(rng, d), dims), Kernel::matern(0.5, 0.3, {0.5}, {0})});
  }
}

Outcome gp_oracle_equivalence() {
  Rng rng(1001);
  double worst = 0.0;
  for (int instance = 0; instance < 50; ++instance) {
    const int d = 1 + instance % 5;
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(19));
    GPHyperparams hp{mixed_kernel(instance, rng, d)};
    hp.noise = 1e-2 * (1.0 + 9.0 * rng.uniform());
    const Eigen::MatrixXd X = uniform_matrix(rng, n, d);
    const Eigen::VectorXd y = normal_vector(rng, n);
    const Eigen::MatrixXd Xq = uniform_matrix(rng, 7, d);
    const auto post = gp_posterior(gp_fit(X, y, hp, kRaw), Xq, true);

    Eigen::MatrixXd K = hp.kernel.matrix(X);
    K.diagonal().array() += hp.noise;
    const Eigen::MatrixXd K_inv = K.inverse();
    const Eigen::MatrixXd Kqx = hp.kernel.matrix(Xq, X);
    const Eigen::VectorXd mean = Kqx * K_inv * y;
    const Eigen::MatrixXd cov = hp.kernel.matrix(Xq) - Kqx * K_inv * Kqx.transpose();
    worst = std::max({worst, relative_error(post.mean, mean), relative_error(*post.covariance, cov)});
  }
  return {worst < 1e-8, fmt("50 instances, max relative error %.2e", worst)};
}

Outcome general_conditioning() {
  Rng rng(1002);
  double worst = 0.0;
  for (int instance = 0; instance < 10; ++instance) {
    const int d = 1 + instance % 4;
    const Eigen::Index n = 5 + instance;
    GPHyperparams hp{mixed_kernel(instance, rng, d)};
    hp.noise = 0.05;
    const Eigen::MatrixXd X = uniform_matrix(rng, n, d);
    const Eigen::VectorXd y = normal_vector(rng, n);
    const Eigen::MatrixXd Xq = uniform_matrix(rng, 6, d);
    JointGaussian joint;
    joint.mean_z = Eigen::VectorXd::Zero(n);
    joint.mean_f = Eigen::VectorXd::Zero(6);
    joint.cov_zz = hp.kernel.matrix(X);
    joint.cov_zz.diagonal().array() += hp.noise;
    joint.cov_zf = hp.kernel.matrix(X, Xq);
    joint.cov_ff = hp.kernel.matrix(Xq);
    const auto general = gp_condition_general(joint, y);
    const auto direct = gp_posterior(gp_fit(X, y, hp, kRaw), Xq, true);
    worst = std::max({worst, (general.mean - direct.mean).cwiseAbs().maxCoeff(),
                      (*general.covariance - *direct.covariance).cwiseAbs().maxCoeff()});
  }
  return {worst < 1e-10, fmt("10 instances, max abs difference %.2e", worst)};
}

Outcome blr_equals_gp() {
  Rng rng(1003);
  double worst = 0.0;
  for (int instance = 0; instance < 10; ++instance) {
    const int p = 1 + instance % 5;
    const Eigen::MatrixXd Phi = uniform_matrix(rng, 15, p);
    const Eigen::MatrixXd Phi_q = uniform_matrix(rng, 5, p);
    const Eigen::VectorXd y = normal_vector(rng, 15);
    const double noise = 0.05 + 0.2 * rng.uniform();
    // Prior weight covariance diag(v) is the linear kernel on features scaled by sqrt(v).
    Eigen::VectorXd v(p);
    for (int j = 0; j < p; ++j) v(j) = 0.5 + rng.uniform();
    const auto blr = blr_predict(Phi, v.asDiagonal().toDenseMatrix(), noise, y, Phi_q);
    const Eigen::MatrixXd S = v.cwiseSqrt().asDiagonal();
    GPHyperparams hp{Kernel::linear(1e-300, all_dims(p))};
    hp.noise = noise;
    const auto gp = gp_posterior(gp_fit(Phi * S, y, hp, kRaw), Phi_q * S);
    worst = std::max({worst, (blr.mean - gp.mean).cwiseAbs().maxCoeff(),
                      (blr.variance - gp.variance).cwiseAbs().maxCoeff()});
  }
  return {worst < 1e-8, fmt("10 feature maps, max abs difference %.2e", worst)};
}

Outcome acquisition_vs_monte_carlo() {
  Rng tuples(1004);
  Rng draws(2004);
  constexpr int kSamples = 1'000'000;
  double worst_z = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double mu = 2.0 * tuples.normal();
    const double sigma = 0.1 + 2.0 * tuples.uniform();
    const double y_best = mu + sigma * (3.0 * tuples.uniform() - 1.5);
    const double xi = 0.1 * tuples.uniform();
    double ei_sum = 0.0, ei_sq = 0.0, pi_sum = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const double f = mu + sigma * draws.normal();
      const double imp = std::max(f - y_best - xi, 0.0);
      ei_sum += imp;
      ei_sq += imp * imp;
      pi_sum += imp > 0.0 ? 1.0 : 0.0;
    }
    const double ei_mc = ei_sum / kSamples;
    const double ei_se = std::sqrt(std::max(ei_sq / kSamples - ei_mc * ei_mc, 0.0) / kSamples);
    const double pi_mc = pi_sum / kSamples;
    const double pi_se = std::sqrt(pi_mc * (1.0 - pi_mc) / kSamples);
    const double ei_z = std::abs(acq_ei(mu, sigma, y_best, xi) - ei_mc) / std::max(ei_se, 1e-300);
    const double pi_z = std::abs(acq_pi(mu, sigma, y_best, xi) - pi_mc) / std::max(pi_se, 1e-300);
    worst_z = std::max({worst_z, ei_z, pi_z});
  }
  return {worst_z < 3.0, fmt("20 tuples x 1e6 draws, worst deviation %.2f standard errors", worst_z)};
}

Outcome beta_schedule_values() {
  constexpr double kReference = 14.810911162905765;  // independent high-precision evaluation
  const double value = beta_finite(1, 100, 0.1);
  bool monotone = true;
  for (int t = 2; t <= 1000; ++t) {
    monotone = monotone && beta_finite(t, 100, 0.1) > beta_finite(t - 1, 100, 0.1);
    monotone = monotone && beta_compact(t, 2, 0.1, 1, 1, 1) > beta_compact(t - 1, 2, 0.1, 1, 1, 1);
  }
  return {std::abs(value - kReference) <= 1e-3 && std::abs(value - 14.811) <= 1e-3 && monotone,
          fmt("beta_finite(1, 100, 0.1) = %.12f, ", value) + (monotone ? "increasing" : "not increasing") + " on [1, 1000]"};
}

SimplexBounds uniform_bounds(int n, double lo, double hi) {
  return {Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

Outcome simplex_bijection() {
  const std::vector<SimplexBounds> cases{uniform_bounds(2, 0.1, 0.9), uniform_bounds(3, 0.1, 0.5),
                                         uniform_bounds(5, 0.05, 0.35)};
  Rng rng(1006);
  double round_trip = 0.0, sum_error = 0.0;
  bool in_bounds = true;
  for (const auto& b : cases) {
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd z(b.size() - 1);
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.uniform();
      const Eigen::VectorXd x = simplex_inverse(b, z);
      sum_error = std::max(sum_error, std::abs(x.sum() - 1.0));
      in_bounds = in_bounds && (x - b.lower).minCoeff() >= 0.0 && (b.upper - x).minCoeff() >= 0.0;
      round_trip = std::max(round_trip, (simplex_forward(b, x) - z).cwiseAbs().maxCoeff());
    }
  }
  return {round_trip < 1e-10 && sum_error <= 1e-12 && in_bounds,
          fmt("n in {2,3,5}, round trip %.2e, |sum - 1| %.2e", round_trip, sum_error) +
              (in_bounds ? ", bounds held" : ", bounds violated")};
}

Outcome marginal_likelihood() {
  constexpr double kStandardPoint = -0.91893853320467274;  // y = 0, k = 1, no noise
  constexpr double kNoisyPoint = -1.5155121234846454;      // y = 1, k = 1, noise 1
  const Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 1);
  GPHyperparams unit{Kernel::rbf(1.0, {1.0}, {0})};
  const double a = log_marginal_likelihood(gp_fit(origin, Eigen::VectorXd::Zero(1), unit, kRaw));
  unit.noise = 1.0;
  const double b = log_marginal_likelihood(gp_fit(origin, Eigen::VectorXd::Ones(1), unit, kRaw));
  const bool scalar_ok = std::abs(a - kStandardPoint) < 1e-6 && std::abs(b - kNoisyPoint) < 1e-6;

  Rng rng(1007);
  double worst = 0.0;
  for (int instance = 0; instance < 5; ++instance) {
    const int d = 1 + instance % 3;
    const Eigen::MatrixXd X = uniform_matrix(rng, 12, d);
    const Eigen::VectorXd y = normal_vector(rng, 12);
    GPHyperparams hp{mixed_kernel(instance, rng, d)};
    hp.noise = 0.05;
    hp.mean = MeanFunction::constant(0.3);
    const Eigen::VectorXd g = log_marginal_likelihood_gradient(gp_fit(X, y, hp));
    const auto k = static_cast<Eigen::Index>(hp.kernel.num_params());
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
      worst = std::max(worst, std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return {scalar_ok && worst < 1e-4,
          fmt("scalar cases %.8f / %.8f, gradient relative error %.2e", a, b, worst)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome bo_beats_random() {
  bench::BenchmarkConfig config;
  config.methods = {"gp_ucb", "random"};
  config.seeds.clear();
  for (std::uint64_t s = 0; s < 16; ++s) config.seeds.push_back(s);
  config.budget = 100;
  config.n_init = 20;
  config.beta = 2.0;
  const auto start = std::chrono::steady_clock::now();
  const auto table = bench::run_benchmark(config);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;

  const double bo = table.mean_final_simple_regret("gp_ucb");
  const double random = table.mean_final_simple_regret("random");
  std::vector<double> avg20, avg100;
  for (const auto& run : table.runs) {
    if (run.method != "gp_ucb") continue;
    const auto trace = regret_trace(run.y, table.f_star);
    avg20.push_back(trace.average(20));
    avg100.push_back(trace.average(100));
  }
  const bool complete = table.failures.empty() && avg100.size() == 16;
  const double m20 = complete ? median(avg20) : NAN;
  const double m100 = complete ? median(avg100) : NAN;
  return {complete && bo < random && m100 < m20 && minutes < 10.0,
          fmt("final simple regret BO %.4f vs random %.4f; ", bo, random) +
              fmt("median R_T/T %.4f (T=20) -> %.4f (T=100); ", m20, m100) + fmt("%.1f min", minutes)};
}

StudyConfig replay_config(std::uint64_t seed) {
  StudyConfig c;
  c.seed = seed;
  c.n_init = 5;
  c.q = 2;
  c.strategy.pool_size = 300;
  c.hyperfit.restarts = 2;
  return c;
}

// Observes the first outstanding suggestion, so batches of q = 2 straddle
// the persist/reload point with a suggestion still pending.
void step(Study& study, const bench::Objective& objective, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = study.suggest().front();
    study.observe(x, objective.evaluate(x));
  }
}

Outcome replay_determinism() {
  const auto objective = bench::builtin_objective("wavy2d");
  std::size_t identical = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Study straight(objective.space, replay_config(seed), [] { return std::string("t"); });
    step(straight, objective, 20);
    Study first(objective.space, replay_config(seed), [] { return std::string("t"); });
    step(first, objective, 11);
    const std::string saved = first.to_json().dump();
    Study resumed = Study::from_json(json::parse(saved), [] { return std::string("t"); });
    step(resumed, objective, 9);
    if (resumed.to_json()["history"].dump() == straight.to_json()["history"].dump()) ++identical;
  }
  return {identical == 5, fmt("%.0f of 5 seeds identical after persist/reload at 11 of 20", identical)};
}

Outcome service_equivalence() {
  const auto clock = [] { return std::string("2024-01-01T00:00:00Z"); };
  const auto objective = bench::builtin_objective("wavy2d");
  const auto dir = std::filesystem::temp_directory_path() / "smbo-acceptance-service";
  std::filesystem::remove_all(dir);
  service::StudyStore store(dir, clock);
  service::Api api(store);
  StudyConfig config = replay_config(7);
  config.q = 1;

  auto call = [&](const std::string& method, const std::string& path, const json& body) {
    const auto r = api.handle({method, path, {}, body.dump()});
    if (r.status >= 300) throw std::runtime_error(path + ": " + r.body.dump());
    return r.body;
  };
  const std::string id = call("POST", "/studies", {{"space", objective.space.to_json()}, {"config", config.to_json()}})["id"];
  for (int i = 0; i < 15; ++i) {
    const auto x = call("POST", "/studies/" + id + "/suggest", json::object())["suggestions"][0];
    const double y = objective.evaluate(objective.space.point_from_json(x));
    call("POST", "/studies/" + id + "/observe", {{"x", x}, {"y", y}});
  }
  const auto best = api.handle({"GET", "/studies/" + id + "/best", {{"mode", "observed"}}, ""}).body;

  Study library(objective.space, config, clock);
  for (int i = 0; i < 15; ++i) {
    const auto x = library.suggest()[0];
    library.observe(x, objective.evaluate(x));
  }
  std::ifstream in(dir / (id + ".json"));
  const json persisted = json::parse(in);
  std::filesystem::remove_all(dir);
  const json& persisted_study = persisted.contains("study") ? persisted["study"] : persisted;
  const bool same_history = persisted_study.at("history").dump() == library.to_json()["history"].dump();
  const bool same_best = best.at("x") == objective.space.point_to_json(library.incumbent()->x);
  return {same_history && same_best,
          std::string("15-step API session vs library: history ") + (same_history ? "identical" : "differs") +
              ", best " + (same_best ? "identical" : "differs")};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"GP posterior matches dense-inverse reference", gp_oracle_equivalence},
      {"general Gaussian conditioning equals GP posterior", general_conditioning},
      {"Bayesian linear regression equals linear-kernel GP", blr_equals_gp},
      {"EI and PI closed forms agree with Monte Carlo", acquisition_vs_monte_carlo},
      {"beta schedule value and monotonicity", beta_schedule_values},
      {"bounded-simplex reparameterization is a bijection", simplex_bijection},
      {"marginal likelihood values and gradient", marginal_likelihood},
      {"BO beats random search on wavy2d with sublinear regret", bo_beats_random},
      {"persist/reload replay is deterministic", replay_determinism},
      {"service session reproduces library run", service_equivalence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::printf("%s [%zu] %s -- %s (%.2fs)\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
