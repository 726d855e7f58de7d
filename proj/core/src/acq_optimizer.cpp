#include "smbo/acq_optimizer.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxGridSize = 2'000'000;

std::string kind_name(SearchStrategy::Kind k) {
  switch (k) {
    case SearchStrategy::Kind::grid: return "grid";
    case SearchStrategy::Kind::random: return "random";
    case SearchStrategy::Kind::random_plus_local: return "random_plus_local";
  }
  return "";
}

std::vector<double> row_key(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd canonical(const DesignSpace& space, const Eigen::VectorXd& u) {
  return space.to_unit(space.from_unit(u));
}

/// Unit-coordinate blocks that a grid visits for one parameter.
std::vector<Eigen::VectorXd> grid_levels(const ParamSpec& p, std::size_t resolution) {
  std::vector<Eigen::VectorXd> levels;
  if (p.kind == ParamKind::cat) {
    for (std::size_t c = 0; c < p.categories.size(); ++c) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.categories.size()));
      v(static_cast<Eigen::Index>(c)) = 1.0;
      levels.push_back(v);
    }
    return levels;
  }
  if (p.kind == ParamKind::boolean) return {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)};
  const DesignSpace single({p});
  if (p.is_discrete() && p.grid_size() <= resolution) {
    for (std::size_t i = 0; i < p.grid_size(); ++i) {
      DesignPoint point;
      point.values[p.name] = p.grid_value(i);
      levels.push_back(single.to_unit(point));
    }
    return levels;
  }
  std::set<double> seen;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double u = resolution == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(resolution - 1);
    const Eigen::VectorXd c = canonical(single, Eigen::VectorXd::Constant(1, u));
    if (seen.insert(c(0)).second) levels.push_back(c);
  }
  return levels;
}

Eigen::MatrixXd grid_pool(const DesignSpace& space, std::size_t resolution) {
  std::vector<std::vector<Eigen::VectorXd>> levels;
  std::size_t total = 1;
  for (const auto& p : space.params()) {
    levels.push_back(grid_levels(p, resolution));
    total *= levels.back().size();
    if (total > kMaxGridSize) throw ValidationError("grid search would exceed 2e6 candidates; lower the resolution");
  }
  Eigen::MatrixXd pool(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(space.embedded_dim()));
  std::vector<std::size_t> idx(levels.size(), 0);
  for (std::size_t row = 0; row < total; ++row) {
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const auto& block = levels[k][idx[k]];
      pool.row(static_cast<Eigen::Index>(row)).segment(static_cast<Eigen::Index>(space.offset(k)), block.size()) =
          block.transpose();
    }
    // Odometer increment, last parameter fastest.
    for (std::size_t k = levels.size(); k-- > 0;) {
      if (++idx[k] < levels[k].size()) break;
      idx[k] = 0;
    }
  }
  return pool;
}

std::size_t argmax_excluding(const std::vector<ScoredPoint>& scored, const std::set<std::vector<double>>& excluded) {
  std::size_t best = scored.size();
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (!excluded.empty() && excluded.count(row_key(scored[i].embedded)) > 0) continue;
    if (best == scored.size() || scored[i].score > scored[best].score) best = i;
  }
  return best;
}

}  // namespace

void SearchStrategy::validate() const {
  if (resolution < 1) throw ValidationError("search strategy: resolution must be >= 1");
  if (pool_size < 1) throw ValidationError("search strategy: pool_size must be >= 1");
  if (kind == Kind::random_plus_local && !(local_scale > 0.0)) {
    throw ValidationError("search strategy: local_scale must be > 0");
  }
}

json SearchStrategy::to_json() const {
  json j{{"kind", kind_name(kind)}};
  if (kind == Kind::grid) {
    j["resolution"] = resolution;
  } else {
    j["pool_size"] = pool_size;
  }
  if (kind == Kind::random_plus_local) {
    j["local_top"] = local_top;
    j["perturbations"] = perturbations;
    j["local_scale"] = local_scale;
  }
  return j;
}

SearchStrategy SearchStrategy::from_json(const json& j) {
  SearchStrategy s;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "grid") {
    s.kind = Kind::grid;
  } else if (kind == "random") {
    s.kind = Kind::random;
  } else if (kind == "random_plus_local") {
    s.kind = Kind::random_plus_local;
  } else {
    throw ValidationError("unknown search strategy '" + kind + "'");
  }
  const auto positive = [&](const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = j.at(key).get<long long>();
    if (v < 0) throw ValidationError(std::string("search strategy: ") + key + " must be >= 0");
    return static_cast<std::size_t>(v);
  };
  s.resolution = positive("resolution", s.resolution);
  s.pool_size = positive("pool_size", s.pool_size);
  s.local_top = positive("local_top", s.local_top);
  s.perturbations = positive("perturbations", s.perturbations);
  s.local_scale = j.value("local_scale", s.local_scale);
  s.validate();
  return s;
}

Eigen::MatrixXd candidate_pool(const DesignSpace& space, const SearchStrategy& strategy, Rng& rng) {
  strategy.validate();
  if (space.size() == 0) throw ValidationError("cannot search an empty design space");
  if (strategy.kind == SearchStrategy::Kind::grid) return grid_pool(space, strategy.resolution);
  return space.embed(space.sample(strategy.pool_size, rng));
}

std::vector<ScoredPoint> score_candidates(const GPModel& model, const DesignSpace& space, const Eigen::MatrixXd& pool,
                                          const AcquisitionSpec& spec, const AcquisitionContext& ctx, Rng& rng) {
  if (pool.rows() == 0) throw ValidationError("acquisition pool is empty");
  const auto post = gp_posterior(model, pool);
  const Eigen::VectorXd sd = post.stddev();
  Eigen::VectorXd draw;
  if (spec.kind == AcquisitionKind::thompson) draw = acq_thompson(model, pool, rng);
  const Eigen::VectorXd scores =
      acquisition_scores(spec, post.mean, sd, ctx.y_best, ctx.t, spec.kind == AcquisitionKind::thompson ? &draw : nullptr);
  std::vector<ScoredPoint> out;
  out.reserve(static_cast<std::size_t>(pool.rows()));
  for (Eigen::Index i = 0; i < pool.rows(); ++i) {
    out.push_back({space.from_unit(pool.row(i).transpose()), pool.row(i).transpose(), scores(i), post.mean(i), sd(i)});
  }
  return out;
}

std::vector<std::size_t> rank_descending(const std::vector<ScoredPoint>& scored) {
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score > scored[b].score; });
  return order;
}

GPModel fantasize(const GPModel& model, const Eigen::VectorXd& x, FantasyPolicy policy, double value) {
  if (model.size() > 0 && x.size() != model.dim()) throw ValidationError("fantasize: point dimension mismatch");
  const Eigen::MatrixXd xq = x.transpose();
  const double y_hat = policy == FantasyPolicy::posterior_mean ? gp_posterior(model, xq).mean(0) : value;
  Eigen::MatrixXd X(model.size() + 1, x.size());
  if (model.size() > 0) X.topRows(model.size()) = model.inputs();
  X.row(model.size()) = x.transpose();
  Eigen::VectorXd y(model.size() + 1);
  y.head(model.size()) = model.targets();
  y(model.size()) = y_hat;
  return gp_fit(X, y, model.hyperparams(), FitOptions{false, model.transform()});
}

GPModel fantasize(const GPModel& model, const DesignSpace& space, const DesignPoint& x, FantasyPolicy policy,
                  double value) {
  return fantasize(model, space.to_unit(x), policy, value);
}

Eigen::MatrixXd refined_pool(const GPModel& model, const DesignSpace& space, const AcquisitionSpec& spec,
                             const SearchStrategy& strategy, Rng& rng, const AcquisitionContext& ctx) {
  Eigen::MatrixXd pool = candidate_pool(space, strategy, rng);
  if (strategy.kind != SearchStrategy::Kind::random_plus_local || strategy.local_top == 0 ||
      strategy.perturbations == 0) {
    return pool;
  }
  const auto scored = score_candidates(model, space, pool, spec, ctx, rng);
  const auto order = rank_descending(scored);
  const std::size_t top = std::min(strategy.local_top, order.size());
  const auto base = pool.rows();
  pool.conservativeResize(base + static_cast<Eigen::Index>(top * strategy.perturbations), Eigen::NoChange);
  Eigen::Index row = base;
  for (std::size_t k = 0; k < top; ++k) {
    const Eigen::VectorXd& centre = scored[order[k]].embedded;
    for (std::size_t p = 0; p < strategy.perturbations; ++p) {
      Eigen::VectorXd u = centre;
      for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = std::clamp(u(j) + strategy.local_scale * rng.normal(), 0.0, 1.0);
      pool.row(row++) = canonical(space, u).transpose();
    }
  }
  return pool;
}

std::vector<ScoredPoint> maximize_acquisition(const GPModel& model, const DesignSpace& space,
                                              const AcquisitionSpec& spec, const SearchStrategy& strategy,
                                              std::size_t q, Rng& rng, const AcquisitionContext& ctx) {
  if (q < 1) throw ValidationError("maximize_acquisition: q must be >= 1");
  spec.validate();
  const Eigen::MatrixXd pool = refined_pool(model, space, spec, strategy, rng, ctx);

  std::vector<ScoredPoint> picks;
  std::set<std::vector<double>> chosen;
  GPModel current = model;
  for (std::size_t k = 0; k < q; ++k) {
    if (k > 0) current = fantasize(current, picks.back().embedded);
    auto scored = score_candidates(current, space, pool, spec, ctx, rng);
    std::size_t best = argmax_excluding(scored, chosen);
    if (best == scored.size()) best = argmax_excluding(scored, {});  // fewer than q distinct points
    chosen.insert(row_key(scored[best].embedded));
    picks.push_back(std::move(scored[best]));
  }
  return picks;
}

}  // namespace smbo
