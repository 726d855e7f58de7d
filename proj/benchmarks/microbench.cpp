#include <benchmark/benchmark.h>

#include "smbo/acq_optimizer.hpp"
#include "smbo/acquisition.hpp"
#include "smbo/bench.hpp"
#include "smbo/gp.hpp"
#include "smbo/hyperfit.hpp"

namespace {

struct Data {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Data wavy_data(Eigen::Index n) {
  smbo::Rng rng(7);
  Data d{Eigen::MatrixXd(n, 2), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    d.X(i, 0) = rng.uniform();
    d.X(i, 1) = rng.uniform();
    d.y(i) = smbo::bench::wavy2d(d.X(i, 0), d.X(i, 1));
  }
  return d;
}

smbo::GPHyperparams rbf2() { return {smbo::Kernel::rbf(1.0, {0.1, 0.1}, {0, 1}), smbo::MeanFunction::zero(), 1e-6}; }

void BM_GpFit(benchmark::State& state) {
  const auto d = wavy_data(state.range(0));
  const auto hp = rbf2();
  for (auto _ : state) benchmark::DoNotOptimize(smbo::gp_fit(d.X, d.y, hp).alpha().data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GpFit)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNCubed);

void BM_Posterior1000(benchmark::State& state) {
  const auto d = wavy_data(state.range(0));
  const auto model = smbo::gp_fit(d.X, d.y, rbf2());
  const auto q = wavy_data(1000).X;
  for (auto _ : state) benchmark::DoNotOptimize(smbo::gp_posterior(model, q).mean.data());
}
BENCHMARK(BM_Posterior1000)->Arg(20)->Arg(100);

void BM_LogMarginalGradient(benchmark::State& state) {
  const auto d = wavy_data(state.range(0));
  const auto model = smbo::gp_fit(d.X, d.y, rbf2());
  for (auto _ : state) benchmark::DoNotOptimize(smbo::log_marginal_likelihood_gradient(model).data());
}
BENCHMARK(BM_LogMarginalGradient)->Arg(20)->Arg(100);

void BM_FitHyperparams(benchmark::State& state) {
  const auto d = wavy_data(state.range(0));
  smbo::HyperfitConfig config;
  config.restarts = 2;
  for (auto _ : state) benchmark::DoNotOptimize(smbo::fit_hyperparams(d.X, d.y, rbf2(), config).log_marginal_likelihood);
}
BENCHMARK(BM_FitHyperparams)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ExpectedImprovement(benchmark::State& state) {
  double mu = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(smbo::acq_ei(mu, 0.7, 0.1, 0.0));
    mu += 1e-6;
  }
}
BENCHMARK(BM_ExpectedImprovement);

void BM_MaximizeAcquisition(benchmark::State& state) {
  const auto obj = smbo::bench::builtin_objective("wavy2d");
  const auto d = wavy_data(50);
  const auto model = smbo::gp_fit(d.X, d.y, rbf2());
  smbo::AcquisitionSpec spec;
  smbo::SearchStrategy strategy;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    smbo::Rng rng(seed++);
    benchmark::DoNotOptimize(
        smbo::maximize_acquisition(model, obj.space, spec, strategy, static_cast<std::size_t>(state.range(0)), rng));
  }
}
BENCHMARK(BM_MaximizeAcquisition)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
