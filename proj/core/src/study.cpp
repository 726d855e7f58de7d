#include "smbo/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>

#include "smbo/errors.hpp"

namespace smbo {

using nlohmann::json;

namespace {

// Stream labels for the per-purpose random generators.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kExtraInitStream = 2;
constexpr std::uint64_t kSuggestStream = 3;
constexpr std::uint64_t kHyperfitStream = 4;
constexpr std::uint64_t kRecommendStream = 5;

json extended_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_extended(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw ValidationError(std::string(what) + " must be a number or \"inf\"");
}

std::size_t read_count(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ValidationError(std::string(key) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ValidationError(std::string(what) + ": unexpected field '" + key + "'");
    }
  }
}

}  // namespace

std::string to_string(Source s) {
  switch (s) {
    case Source::algorithm: return "algorithm";
    case Source::human_override: return "human-override";
    case Source::initialization: return "initialization";
  }
  return "";
}

Source source_from_string(const std::string& s) {
  if (s == "algorithm") return Source::algorithm;
  if (s == "human-override") return Source::human_override;
  if (s == "initialization") return Source::initialization;
  throw ValidationError("source must be algorithm, human-override or initialization, got '" + s + "'");
}

std::string to_string(Study::State s) {
  switch (s) {
    case Study::State::initializing: return "initializing";
    case Study::State::running: return "running";
    case Study::State::stopped: return "stopped";
  }
  return "";
}

std::string to_string(RecommendMode m) { return m == RecommendMode::observed ? "observed" : "model"; }

RecommendMode recommend_mode_from_string(const std::string& s) {
  if (s == "observed") return RecommendMode::observed;
  if (s == "model") return RecommendMode::model;
  throw ValidationError("mode must be 'observed' or 'model', got '" + s + "'");
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

void StoppingRule::validate() const {
  if (budget && *budget < 1) throw ValidationError("stopping budget must be >= 1");
  if (min_improvement) {
    if (!(min_improvement->epsilon >= 0.0)) throw ValidationError("min_improvement epsilon must be >= 0");
    if (min_improvement->window < 1) throw ValidationError("min_improvement window must be >= 1");
  }
  if (acquisition_floor && !(*acquisition_floor >= 0.0)) throw ValidationError("acquisition_floor must be >= 0");
}

json StoppingRule::to_json() const {
  json j = json::object();
  if (budget) j["budget"] = *budget;
  if (min_improvement) {
    j["min_improvement"] = {{"epsilon", extended_number(min_improvement->epsilon)},
                            {"window", min_improvement->window}};
  }
  if (acquisition_floor) j["acquisition_floor"] = extended_number(*acquisition_floor);
  return j;
}

StoppingRule StoppingRule::from_json(const json& j) {
  reject_unknown(j, {"budget", "min_improvement", "acquisition_floor"}, "stopping");
  StoppingRule r;
  if (j.contains("budget")) r.budget = read_count(j, "budget");
  if (j.contains("min_improvement")) {
    const auto& m = j.at("min_improvement");
    reject_unknown(m, {"epsilon", "window"}, "min_improvement");
    r.min_improvement = MinImprovement{read_extended(m.at("epsilon"), "epsilon"), read_count(m, "window")};
  }
  if (j.contains("acquisition_floor")) r.acquisition_floor = read_extended(j.at("acquisition_floor"), "acquisition_floor");
  r.validate();
  return r;
}

json HitlTrigger::to_json() const {
  return {{"mode", mode == Mode::always ? "always" : "uncertainty"}, {"threshold", threshold}};
}

HitlTrigger HitlTrigger::from_json(const json& j) {
  reject_unknown(j, {"mode", "threshold"}, "hitl");
  HitlTrigger h;
  const auto mode = j.value("mode", std::string("always"));
  if (mode == "always") {
    h.mode = Mode::always;
  } else if (mode == "uncertainty") {
    h.mode = Mode::uncertainty;
  } else {
    throw ValidationError("hitl mode must be 'always' or 'uncertainty'");
  }
  h.threshold = j.value("threshold", 0.0);
  if (!(h.threshold >= 0.0)) throw ValidationError("hitl threshold must be >= 0");
  return h;
}

void StudyConfig::validate() const {
  if (n_init < 1) throw ValidationError("n_init must be >= 1");
  if (q < 1) throw ValidationError("q must be >= 1");
  if (refit_every < 1) throw ValidationError("refit_every must be >= 1");
  if (acquisition.direction != direction) throw ValidationError("acquisition direction differs from study direction");
  acquisition.validate();
  strategy.validate();
  stopping.validate();
  if (surrogate) surrogate->validate();
  if (hyperfit.restarts < 1) throw ValidationError("hyperfit restarts must be >= 1");
}

json StudyConfig::to_json() const {
  json j{{"direction", smbo::to_string(direction)},
         {"acquisition", acquisition.to_json()},
         {"n_init", n_init},
         {"init_method", smbo::to_string(init_method)},
         {"q", q},
         {"strategy", strategy.to_json()},
         {"stopping", stopping.to_json()},
         {"seed", seed},
         {"refit_every", refit_every},
         {"hyperfit", hyperfit.to_json()},
         {"hitl", hitl.to_json()}};
  if (surrogate) j["surrogate"] = surrogate->to_json();
  return j;
}

StudyConfig StudyConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"direction", "acquisition", "surrogate", "n_init", "init_method", "q", "strategy", "stopping", "seed",
                  "refit_every", "hyperfit", "hitl"},
                 "config");
  StudyConfig c;
  if (j.contains("direction")) c.direction = direction_from_string(j.at("direction").get<std::string>());
  if (j.contains("acquisition")) {
    json a = j.at("acquisition");
    if (a.is_object() && !a.contains("direction")) a["direction"] = smbo::to_string(c.direction);
    c.acquisition = AcquisitionSpec::from_json(a);
  } else {
    c.acquisition.direction = c.direction;
    if (c.direction == Direction::minimize) c.acquisition.kind = AcquisitionKind::lcb;
  }
  if (j.contains("surrogate")) c.surrogate = GPHyperparams::from_json(j.at("surrogate"));
  if (j.contains("n_init")) c.n_init = read_count(j, "n_init");
  if (j.contains("init_method")) c.init_method = init_method_from_string(j.at("init_method").get<std::string>());
  if (j.contains("q")) c.q = read_count(j, "q");
  if (j.contains("strategy")) c.strategy = SearchStrategy::from_json(j.at("strategy"));
  if (j.contains("stopping")) c.stopping = StoppingRule::from_json(j.at("stopping"));
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("refit_every")) c.refit_every = read_count(j, "refit_every");
  if (j.contains("hyperfit")) c.hyperfit = HyperfitConfig::from_json(j.at("hyperfit"));
  if (j.contains("hitl")) c.hitl = HitlTrigger::from_json(j.at("hitl"));
  c.validate();
  return c;
}

GPHyperparams default_surrogate(const DesignSpace& space) {
  const auto scalar = space.scalar_coordinates();
  const auto blocks = space.categorical_blocks();
  std::vector<Kernel> factors;
  if (!scalar.empty()) factors.push_back(Kernel::rbf(1.0, std::vector<double>(scalar.size(), 0.2), scalar));
  for (const auto& block : blocks) factors.push_back(Kernel::categorical(1.0, block));
  if (factors.empty()) throw ValidationError("design space has no parameters");
  Kernel k = factors.size() == 1 ? factors.front() : Kernel::product(factors);
  return GPHyperparams{std::move(k), MeanFunction::zero(), 1e-6};
}

// ---------------------------------------------------------------------------
// Study

Study::Study(DesignSpace space, StudyConfig config, Clock clock)
    : space_(std::move(space)), config_(std::move(config)), clock_(std::move(clock)) {
  if (space_.size() == 0) throw ValidationError("study needs a non-empty design space");
  config_.validate();
  const auto fam = family();
  if (fam.kernel.required_dim() > static_cast<int>(space_.embedded_dim())) {
    throw ValidationError("surrogate kernel addresses coordinates beyond the design space's embedding");
  }
  if (fam.mean.kind() == MeanFunction::Kind::linear &&
      fam.mean.num_params() != space_.embedded_dim()) {
    throw ValidationError("linear mean needs one coefficient per embedded coordinate");
  }
}

GPHyperparams Study::family() const { return config_.surrogate ? *config_.surrogate : default_surrogate(space_); }

std::optional<Incumbent> Study::incumbent() const {
  std::optional<Incumbent> best;
  for (std::size_t i = 0; i < history_.size(); ++i) {
    if (!best || better(config_.direction, history_[i].y, best->y)) best = Incumbent{history_[i].x, history_[i].y, i};
  }
  return best;
}

DesignPoint Study::init_point(std::size_t index) const {
  if (index < config_.n_init) {
    Rng rng(config_.seed, {kInitStream});
    return init_design(space_, config_.n_init, config_.init_method, rng)[index];
  }
  // Replacements for discarded initial points.
  Rng rng(config_.seed, {kExtraInitStream, index});
  return space_.sample(1, rng).front();
}

void Study::update_state() {
  if (state_ != State::stopped) state_ = history_.size() >= config_.n_init ? State::running : State::initializing;
}

Study::PreparedModel Study::prepare_model() const {
  const auto n = history_.size();
  if (n == 0) throw StateError("the surrogate needs at least one observation");
  std::vector<DesignPoint> xs;
  xs.reserve(n);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(history_[i].x);
    y(static_cast<Eigen::Index>(i)) = history_[i].y;
  }
  const Eigen::MatrixXd X = space_.embed(xs);

  GPHyperparams hp = hyper_cache_ ? *hyper_cache_ : family();
  bool refit = false;
  if (n >= 2 && (!hyper_cache_ || model_rounds_ % config_.refit_every == 0)) {
    HyperfitConfig hc = config_.hyperfit;
    hc.seed = Rng(config_.seed, {kHyperfitStream, n}).next();
    hp = fit_hyperparams(X, y, hp, hc).hyperparams;
    refit = true;
  }
  auto model = gp_fit(X, y, hp, FitOptions{config_.hyperfit.standardize, std::nullopt});
  return PreparedModel{std::move(model), std::move(hp), refit};
}

Rng Study::suggestion_rng() const { return Rng(config_.seed, {kSuggestStream, history_.size()}); }

AcquisitionContext Study::acquisition_context() const {
  const auto inc = incumbent();
  return AcquisitionContext{inc ? inc->y : 0.0, history_.size() + 1};
}

std::vector<DesignPoint> Study::suggest(std::size_t q) {
  if (state_ == State::stopped) throw StateError("study is stopped");
  if (q == 0) q = config_.q;
  std::vector<DesignPoint> out;
  if (!pending_.empty()) {
    for (const auto& p : pending_) out.push_back(p.x);
    return out;
  }
  if (history_.size() < config_.n_init) {
    const std::size_t count = std::min(q, config_.n_init - history_.size());
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back(init_point(init_cursor_++));
      pending_.push_back({out.back(), Source::initialization});
    }
    ++revision_;
    return out;
  }

  auto prepared = prepare_model();
  Rng rng = suggestion_rng();
  const auto picks = maximize_acquisition(prepared.model, space_, config_.acquisition, config_.strategy, q, rng,
                                          acquisition_context());
  hyper_cache_ = std::move(prepared.hyperparams);
  ++model_rounds_;
  last_max_acquisition_ = picks.front().score;
  for (const auto& p : picks) {
    out.push_back(p.point);
    pending_.push_back({p.point, Source::algorithm});
  }
  ++revision_;
  return out;
}

const Observation& Study::observe(const DesignPoint& x, double y, std::optional<Source> source) {
  if (state_ == State::stopped) throw StateError("study is stopped");
  space_.validate(x);
  if (!std::isfinite(y)) throw ValidationError("observed y must be finite");
  Source src = Source::human_override;
  const auto it = std::find_if(pending_.begin(), pending_.end(), [&](const PendingSuggestion& p) { return p.x == x; });
  if (it != pending_.end()) {
    src = it->source;
    pending_.erase(it);
  }
  if (source) src = *source;
  history_.push_back(Observation{x, y, history_.size() + 1, clock_ ? clock_() : std::string(), src});
  update_state();
  ++revision_;
  return history_.back();
}

void Study::discard_pending() {
  if (pending_.empty()) return;
  pending_.clear();
  ++revision_;
}

void Study::stop() {
  if (state_ == State::stopped) return;
  state_ = State::stopped;
  ++revision_;
}

std::vector<SlateEntry> Study::hitl_slate(std::size_t k) const {
  if (state_ == State::stopped) throw StateError("study is stopped");
  if (history_.size() < config_.n_init) throw StateError("study is still in its initial design phase");
  if (k < 1) throw ValidationError("slate size k must be >= 1");
  const auto prepared = prepare_model();
  Rng rng = suggestion_rng();
  const auto ctx = acquisition_context();
  const Eigen::MatrixXd pool = refined_pool(prepared.model, space_, config_.acquisition, config_.strategy, rng, ctx);
  const auto scored = score_candidates(prepared.model, space_, pool, config_.acquisition, ctx, rng);
  std::vector<SlateEntry> slate;
  std::vector<const DesignPoint*> seen;
  for (const auto i : rank_descending(scored)) {
    const auto& s = scored[i];
    if (std::any_of(seen.begin(), seen.end(), [&](const DesignPoint* p) { return *p == s.point; })) continue;
    seen.push_back(&s.point);
    slate.push_back({s.point, s.score, s.mean, s.stddev});
    if (slate.size() == k) break;
  }
  return slate;
}

bool Study::hitl_review_needed() const {
  if (config_.hitl.mode == HitlTrigger::Mode::always) return true;
  const auto slate = hitl_slate(1);
  return slate.front().stddev > config_.hitl.threshold;
}

DesignPoint Study::recommend_best(RecommendMode mode) const {
  if (history_.empty()) throw StateError("no observations yet");
  if (mode == RecommendMode::observed) return incumbent()->x;
  const auto prepared = prepare_model();
  Rng rng(config_.seed, {kRecommendStream, history_.size()});
  const Eigen::MatrixXd observed = prepared.model.inputs();
  const Eigen::MatrixXd extra = space_.embed(space_.sample(config_.strategy.pool_size, rng));
  Eigen::MatrixXd pool(observed.rows() + extra.rows(), observed.cols());
  pool << observed, extra;
  const auto post = gp_posterior(prepared.model, pool);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < pool.rows(); ++i) {
    if (better(config_.direction, post.mean(i), post.mean(best))) best = i;
  }
  return best < observed.rows() ? history_[static_cast<std::size_t>(best)].x
                                : space_.from_unit(pool.row(best).transpose());
}

bool Study::should_stop(const StoppingRule& rule) const {
  const auto n = history_.size();
  if (rule.budget && n >= *rule.budget) return true;
  if (rule.min_improvement && n >= config_.n_init && n >= 1) {
    const auto w = rule.min_improvement->window;
    const std::size_t head = std::max<std::size_t>(n > w ? n - w : 0, 1);
    double before = history_[0].y;
    double all = history_[0].y;
    for (std::size_t i = 0; i < n; ++i) {
      if (i < head && better(config_.direction, history_[i].y, before)) before = history_[i].y;
      if (better(config_.direction, history_[i].y, all)) all = history_[i].y;
    }
    const double improvement = config_.direction == Direction::maximize ? all - before : before - all;
    if (improvement < rule.min_improvement->epsilon) return true;
  }
  if (rule.acquisition_floor && last_max_acquisition_ && *last_max_acquisition_ < *rule.acquisition_floor) return true;
  return false;
}

json Study::to_json() const {
  json history = json::array();
  for (const auto& o : history_) {
    history.push_back({{"x", space_.point_to_json(o.x)},
                       {"y", o.y},
                       {"iteration", o.iteration},
                       {"timestamp", o.timestamp},
                       {"source", to_string(o.source)}});
  }
  json pending = json::array();
  for (const auto& p : pending_) pending.push_back({{"x", space_.point_to_json(p.x)}, {"source", to_string(p.source)}});
  json j{{"version", kVersion},
         {"space", space_.to_json()},
         {"config", config_.to_json()},
         {"seed", config_.seed},
         {"state", to_string(state_)},
         {"history", std::move(history)},
         {"pending", std::move(pending)},
         {"init_cursor", init_cursor_},
         {"model_rounds", model_rounds_},
         {"revision", revision_}};
  j["hyperparams"] = hyper_cache_ ? hyper_cache_->to_json() : json(nullptr);
  j["last_max_acquisition"] = last_max_acquisition_ ? json(*last_max_acquisition_) : json(nullptr);
  return j;
}

Study Study::from_json(const json& j, Clock clock) {
  if (!j.is_object()) throw ValidationError("study document must be an object");
  if (!j.contains("version")) throw ValidationError("study document lacks a version field");
  if (j.at("version") != kVersion) throw ValidationError("unsupported study document version");
  json config = j.at("config");
  if (j.contains("seed")) {
    if (config.contains("seed") && config.at("seed") != j.at("seed")) {
      throw ValidationError("study seed differs from config seed");
    }
    config["seed"] = j.at("seed");
  }
  Study s(DesignSpace::parse(j.at("space")), StudyConfig::from_json(config), std::move(clock));
  for (const auto& o : j.value("history", json::array())) {
    const auto x = s.space_.point_from_json(o.at("x"));
    s.space_.validate(x);
    const double y = o.at("y").get<double>();
    if (!std::isfinite(y)) throw ValidationError("history contains a non-finite y");
    const auto iteration = o.at("iteration").get<std::size_t>();
    if (iteration != s.history_.size() + 1) throw ValidationError("history iterations must be 1, 2, 3, ...");
    s.history_.push_back(Observation{x, y, iteration, o.value("timestamp", std::string()),
                                     source_from_string(o.at("source").get<std::string>())});
  }
  for (const auto& p : j.value("pending", json::array())) {
    const auto x = s.space_.point_from_json(p.at("x"));
    s.space_.validate(x);
    s.pending_.push_back({x, source_from_string(p.at("source").get<std::string>())});
  }
  s.init_cursor_ = j.value("init_cursor", std::size_t{0});
  s.model_rounds_ = j.value("model_rounds", std::size_t{0});
  s.revision_ = j.value("revision", std::uint64_t{0});
  if (j.contains("hyperparams") && !j.at("hyperparams").is_null()) {
    s.hyper_cache_ = GPHyperparams::from_json(j.at("hyperparams"));
  }
  if (j.contains("last_max_acquisition") && !j.at("last_max_acquisition").is_null()) {
    s.last_max_acquisition_ = j.at("last_max_acquisition").get<double>();
  }
  const auto state = j.value("state", std::string("initializing"));
  if (state == "stopped") {
    s.state_ = State::stopped;
  } else if (state == "initializing" || state == "running") {
    s.update_state();
  } else {
    throw ValidationError("unknown study state '" + state + "'");
  }
  return s;
}

void run(Study& study, const Evaluator& evaluator, const StoppingRule& rule,
         const std::function<void(const Study&)>& checkpoint) {
  rule.validate();
  if (rule.empty()) throw ValidationError("run needs a stopping rule");
  while (study.state() != Study::State::stopped && !study.should_stop(rule)) {
    std::size_t q = study.config().q;
    if (rule.budget) q = std::min(q, *rule.budget - study.history().size());
    const auto xs = study.suggest(q);
    for (const auto& x : xs) {
      if (rule.budget && study.history().size() >= *rule.budget) break;
      const double y = evaluator(x);
      study.observe(x, y);
      if (checkpoint) checkpoint(study);
    }
  }
  study.stop();
  if (checkpoint) checkpoint(study);
}

}  // namespace smbo
