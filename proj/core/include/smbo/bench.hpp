#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "smbo/study.hpp"

namespace smbo::bench {

/// sin(5 pi x1) cos(5 pi x2) + 0.5 cos(10 pi x1) sin(10 pi x2) on [0, 1]^2.
double wavy2d(double x1, double x2);
/// Throws ValidationError outside [0, 1]^2.
double wavy2d(const Eigen::Ref<const Eigen::VectorXd>& x);

/// A named objective over a design space, to be maximized.
struct Objective {
  std::string name;
  DesignSpace space;
  Evaluator evaluate;
  /// Evaluation on unit-cube coordinates, used for grid optimum estimates.
  std::function<double(const Eigen::VectorXd&)> on_unit;
};

/// "wavy2d" (optionally written "builtin:wavy2d").
Objective builtin_objective(const std::string& name);

/// T uniform samples of the space evaluated in order (a study whose whole
/// budget is its random initial design).
Study random_search(const DesignSpace& space, std::size_t T, std::uint64_t seed, const Evaluator& evaluator);

struct OptimumEstimate {
  double f_star = 0.0;
  Eigen::VectorXd argmax;
  /// Distance between neighbouring grid points per coordinate.
  double spacing = 0.0;
  std::size_t resolution = 0;
};

/// Maximum of f over the uniform grid with `resolution` points per axis of
/// [0, 1]^dim (first grid point wins ties).
OptimumEstimate estimate_optimum(const std::function<double(const Eigen::VectorXd&)>& f, std::size_t dim,
                                 std::size_t resolution = 1001);

struct BenchmarkConfig {
  std::string objective = "wavy2d";
  /// Any of gp_ucb, bo_ei, bo_lcb, random.
  std::vector<std::string> methods{"gp_ucb", "random"};
  std::vector<std::uint64_t> seeds{0};
  std::size_t budget = 100;
  std::size_t n_init = 20;
  SearchStrategy strategy;
  HyperfitConfig hyperfit;
  std::size_t refit_every = 1;
  /// Plain UCB/LCB weight, replaced by the schedule when one is given.
  double beta = 2.0;
  std::optional<BetaSchedule> beta_schedule;
  /// Standard deviation of additive Gaussian observation noise (0 = exact).
  double noise_sd = 0.0;
  /// Reference optimum; estimated on a grid when absent.
  std::optional<double> f_star;
  std::size_t optimum_resolution = 1001;
  /// Per-run CSV path; the aggregate goes next to it. Empty: no files.
  std::string output;

  void validate() const;
  nlohmann::json to_json() const;
  static BenchmarkConfig from_json(const nlohmann::json& j);
};

struct CurveRow {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  double best_so_far = 0.0;
  double simple_regret = 0.0;
};

struct AggregateRow {
  std::string method;
  std::size_t iteration = 0;
  double mean = 0.0;
  /// Sample standard deviation over runs divided by sqrt(runs).
  double stderr_ = 0.0;
  std::size_t runs = 0;
};

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  /// Observed values in evaluation order (on the objective's own scale).
  std::vector<double> y;
};

struct CurveTable {
  double f_star = 0.0;
  std::vector<CurveRow> rows;
  std::vector<AggregateRow> aggregate;
  std::vector<RunRecord> runs;
  /// "method/seed: message" for runs that failed and were left out.
  std::vector<std::string> failures;

  /// Mean of the last simple regret over the method's runs.
  double mean_final_simple_regret(const std::string& method) const;
};

/// Runs every method x seed cell, builds best-so-far and simple-regret
/// curves and their across-seed aggregates, and writes CSVs if configured.
CurveTable run_benchmark(const BenchmarkConfig& config);

/// Aggregates per-run rows (stable order: methods as first seen, then
/// iteration).
std::vector<AggregateRow> aggregate_rows(const std::vector<CurveRow>& rows);

/// Writes `path` (method,seed,iteration,best_so_far,simple_regret) and the
/// aggregate (method,iteration,mean,stderr) to aggregate_path(path).
/// Numbers use the shortest representation that parses back exactly.
/// Throws ValidationError on an empty table and std::runtime_error on I/O
/// failure. Returns the two paths written.
std::pair<std::string, std::string> export_curves(const CurveTable& table, const std::string& path);
std::string aggregate_path(const std::string& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace smbo::bench
