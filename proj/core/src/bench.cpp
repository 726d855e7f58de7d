#include "smbo/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include "smbo/errors.hpp"
#include "smbo/regret.hpp"

namespace smbo::bench {

using nlohmann::json;

namespace {

constexpr std::uint64_t kNoiseStream = 11;

bool known_method(const std::string& m) { return m == "gp_ucb" || m == "bo_ei" || m == "bo_lcb" || m == "random"; }

StudyConfig bo_config(const BenchmarkConfig& c, const std::string& method, std::uint64_t seed) {
  StudyConfig sc;
  sc.n_init = c.n_init;
  sc.seed = seed;
  sc.strategy = c.strategy;
  sc.hyperfit = c.hyperfit;
  sc.refit_every = c.refit_every;
  if (method == "bo_lcb") {
    sc.direction = Direction::minimize;
    sc.acquisition.kind = AcquisitionKind::lcb;
  } else if (method == "bo_ei") {
    sc.acquisition.kind = AcquisitionKind::ei;
  } else {
    sc.acquisition.kind = AcquisitionKind::ucb;
  }
  sc.acquisition.direction = sc.direction;
  sc.acquisition.beta = c.beta;
  if (method != "bo_ei") sc.acquisition.beta_schedule = c.beta_schedule;
  return sc;
}

}  // namespace

double wavy2d(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  return std::sin(5.0 * pi * x1) * std::cos(5.0 * pi * x2) + 0.5 * std::cos(10.0 * pi * x1) * std::sin(10.0 * pi * x2);
}

double wavy2d(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != 2) throw ValidationError("wavy2d takes a 2-vector");
  if (!(x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0)) throw ValidationError("wavy2d is defined on [0, 1]^2");
  return wavy2d(x(0), x(1));
}

Objective builtin_objective(const std::string& name) {
  const std::string bare = name.rfind("builtin:", 0) == 0 ? name.substr(8) : name;
  if (bare == "wavy2d") {
    ParamSpec x1{"x1", ParamKind::num, 0.0, 1.0, 0.0, 0, {}};
    ParamSpec x2{"x2", ParamKind::num, 0.0, 1.0, 0.0, 0, {}};
    return Objective{"wavy2d", DesignSpace({x1, x2}),
                     [](const DesignPoint& p) { return wavy2d(Eigen::Vector2d(p.real("x1"), p.real("x2"))); },
                     [](const Eigen::VectorXd& u) { return wavy2d(u); }};
  }
  throw ValidationError("unknown builtin objective '" + name + "'");
}

Study random_search(const DesignSpace& space, std::size_t T, std::uint64_t seed, const Evaluator& evaluator) {
  if (T < 1) throw ValidationError("random_search: T must be >= 1");
  StudyConfig config;
  config.n_init = T;
  config.init_method = InitMethod::random;
  config.seed = seed;
  Study study(space, config);
  run(study, evaluator, StoppingRule::with_budget(T));
  return study;
}

OptimumEstimate estimate_optimum(const std::function<double(const Eigen::VectorXd&)>& f, std::size_t dim,
                                 std::size_t resolution) {
  if (dim < 1 || resolution < 1) throw ValidationError("estimate_optimum: dim and resolution must be >= 1");
  const double spacing = resolution == 1 ? 0.0 : 1.0 / static_cast<double>(resolution - 1);
  const auto coord = [&](std::size_t i) { return resolution == 1 ? 0.5 : static_cast<double>(i) * spacing; };
  std::vector<std::size_t> idx(dim, 0);
  Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
  OptimumEstimate best{-std::numeric_limits<double>::infinity(), Eigen::VectorXd(), spacing, resolution};
  while (true) {
    for (std::size_t k = 0; k < dim; ++k) x(static_cast<Eigen::Index>(k)) = coord(idx[k]);
    const double v = f(x);
    if (v > best.f_star) {
      best.f_star = v;
      best.argmax = x;
    }
    std::size_t k = dim;
    while (k-- > 0) {
      if (++idx[k] < resolution) break;
      idx[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return best;
}

void BenchmarkConfig::validate() const {
  if (methods.empty()) throw ValidationError("benchmark needs at least one method");
  for (const auto& m : methods) {
    if (!known_method(m)) throw ValidationError("unknown benchmark method '" + m + "'");
  }
  if (seeds.empty()) throw ValidationError("benchmark needs at least one seed");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      if (seeds[i] == seeds[j]) throw ValidationError("benchmark seeds must be distinct");
    }
  }
  if (budget < 1) throw ValidationError("benchmark budget must be >= 1");
  if (n_init < 1 || budget < n_init) throw ValidationError("benchmark needs 1 <= n_init <= budget");
  if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd must be >= 0");
  if (!(beta >= 0.0)) throw ValidationError("beta must be >= 0");
  if (refit_every < 1) throw ValidationError("refit_every must be >= 1");
  strategy.validate();
  if (beta_schedule) beta_schedule->validate();
}

json BenchmarkConfig::to_json() const {
  json j{{"objective", objective},
         {"methods", methods},
         {"seeds", seeds},
         {"budget", budget},
         {"n_init", n_init},
         {"strategy", strategy.to_json()},
         {"hyperfit", hyperfit.to_json()},
         {"refit_every", refit_every},
         {"beta", beta},
         {"noise_sd", noise_sd},
         {"optimum_resolution", optimum_resolution},
         {"output", output}};
  if (beta_schedule) j["beta_schedule"] = beta_schedule->to_json();
  if (f_star) j["f_star"] = *f_star;
  return j;
}

BenchmarkConfig BenchmarkConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("benchmark config must be an object");
  static const std::vector<std::string> allowed{"objective", "methods",  "seeds",       "budget",
                                                "n_init",    "strategy", "hyperfit",    "refit_every",
                                                "beta",      "beta_schedule", "noise_sd", "f_star",
                                                "optimum_resolution", "output"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("benchmark config: unexpected field '" + key + "'");
    }
  }
  BenchmarkConfig c;
  c.objective = j.value("objective", c.objective);
  if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.budget = j.value("budget", c.budget);
  c.n_init = j.value("n_init", c.n_init);
  if (j.contains("strategy")) c.strategy = SearchStrategy::from_json(j.at("strategy"));
  if (j.contains("hyperfit")) c.hyperfit = HyperfitConfig::from_json(j.at("hyperfit"));
  c.refit_every = j.value("refit_every", c.refit_every);
  c.beta = j.value("beta", c.beta);
  if (j.contains("beta_schedule")) c.beta_schedule = BetaSchedule::from_json(j.at("beta_schedule"));
  c.noise_sd = j.value("noise_sd", c.noise_sd);
  if (j.contains("f_star")) c.f_star = j.at("f_star").get<double>();
  c.optimum_resolution = j.value("optimum_resolution", c.optimum_resolution);
  c.output = j.value("output", c.output);
  c.validate();
  return c;
}

double CurveTable::mean_final_simple_regret(const std::string& method) const {
  std::map<std::uint64_t, double> last;
  for (const auto& r : rows) {
    if (r.method == method) last[r.seed] = r.simple_regret;
  }
  if (last.empty()) throw ValidationError("no runs for method '" + method + "'");
  double total = 0.0;
  for (const auto& [_, v] : last) total += v;
  return total / static_cast<double>(last.size());
}

std::vector<AggregateRow> aggregate_rows(const std::vector<CurveRow>& rows) {
  std::vector<std::string> order;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> cells;
  std::map<std::string, std::size_t> max_iteration;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    cells[{r.method, r.iteration}].push_back(r.best_so_far);
    max_iteration[r.method] = std::max(max_iteration[r.method], r.iteration);
  }
  std::vector<AggregateRow> out;
  for (const auto& method : order) {
    for (std::size_t t = 1; t <= max_iteration[method]; ++t) {
      const auto it = cells.find({method, t});
      if (it == cells.end()) continue;
      const auto& v = it->second;
      const double n = static_cast<double>(v.size());
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= n;
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double se = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      out.push_back({method, t, mean, se, v.size()});
    }
  }
  return out;
}

CurveTable run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  const auto objective = builtin_objective(config.objective);
  CurveTable table;
  table.f_star = config.f_star ? *config.f_star
                               : estimate_optimum(objective.on_unit, objective.space.embedded_dim(),
                                                  config.optimum_resolution)
                                     .f_star;

  for (const auto& method : config.methods) {
    for (const auto seed : config.seeds) {
      try {
        Rng noise(seed, {kNoiseStream});
        const double sd = config.noise_sd;
        // bo_lcb minimizes -f; curves are always reported on f.
        const double sign = method == "bo_lcb" ? -1.0 : 1.0;
        const Evaluator eval = [&](const DesignPoint& p) {
          const double v = objective.evaluate(p) + (sd > 0.0 ? sd * noise.normal() : 0.0);
          return sign * v;
        };
        std::vector<Observation> history;
        if (method == "random") {
          history = random_search(objective.space, config.budget, seed, eval).history();
        } else {
          Study study(objective.space, bo_config(config, method, seed));
          run(study, eval, StoppingRule::with_budget(config.budget));
          history = study.history();
        }
        RunRecord record{method, seed, {}};
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& o : history) {
          const double y = sign * o.y;
          record.y.push_back(y);
          best = std::max(best, y);
          table.rows.push_back({method, seed, o.iteration, best, table.f_star - best});
        }
        table.runs.push_back(std::move(record));
      } catch (const std::exception& e) {
        table.failures.push_back(method + "/" + std::to_string(seed) + ": " + e.what());
        std::cerr << "warning: benchmark run " << table.failures.back() << " failed; excluded from aggregates\n";
      }
    }
  }
  table.aggregate = aggregate_rows(table.rows);
  if (!config.output.empty() && !table.rows.empty()) export_curves(table, config.output);
  return table;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string aggregate_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + "_aggregate";
  return path.substr(0, dot) + "_aggregate" + path.substr(dot);
}

std::pair<std::string, std::string> export_curves(const CurveTable& table, const std::string& path) {
  if (table.rows.empty()) throw ValidationError("export_curves: table is empty");
  const auto agg_path = aggregate_path(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "method,seed,iteration,best_so_far,simple_regret\n";
    for (const auto& r : table.rows) {
      out << r.method << ',' << r.seed << ',' << r.iteration << ',' << format_double(r.best_so_far) << ','
          << format_double(r.simple_regret) << '\n';
    }
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
  }
  {
    std::ofstream out(agg_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + agg_path + "' for writing");
    out << "method,iteration,mean,stderr\n";
    const auto rows = table.aggregate.empty() ? aggregate_rows(table.rows) : table.aggregate;
    for (const auto& r : rows) {
      out << r.method << ',' << r.iteration << ',' << format_double(r.mean) << ',' << format_double(r.stderr_) << '\n';
    }
    if (!out) throw std::runtime_error("write to '" + agg_path + "' failed");
  }
  return {path, agg_path};
}

}  // namespace smbo::bench
