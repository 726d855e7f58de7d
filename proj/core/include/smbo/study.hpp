#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smbo/acq_optimizer.hpp"
#include "smbo/acquisition.hpp"
#include "smbo/design_space.hpp"
#include "smbo/gp.hpp"
#include "smbo/hyperfit.hpp"
#include "smbo/init_design.hpp"

namespace smbo {

enum class Source { algorithm, human_override, initialization };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

struct Observation {
  DesignPoint x;
  double y = 0.0;
  /// 1-based position in the history.
  std::size_t iteration = 0;
  std::string timestamp;
  Source source = Source::algorithm;
};

struct PendingSuggestion {
  DesignPoint x;
  Source source = Source::algorithm;
};

/// Disjunction of stopping conditions; an empty rule never fires.
struct StoppingRule {
  struct MinImprovement {
    /// May be +infinity ("inf" in JSON).
    double epsilon = 0.0;
    std::size_t window = 1;
  };
  /// Total observations, initialization included.
  std::optional<std::size_t> budget;
  std::optional<MinImprovement> min_improvement;
  /// Fires when the best acquisition utility of the latest model-based
  /// suggestion is below this value. May be +infinity.
  std::optional<double> acquisition_floor;

  static StoppingRule with_budget(std::size_t t) {
    StoppingRule r;
    r.budget = t;
    return r;
  }
  bool empty() const { return !budget && !min_improvement && !acquisition_floor; }
  void validate() const;
  nlohmann::json to_json() const;
  static StoppingRule from_json(const nlohmann::json& j);
};

/// When a human should review a slate instead of taking the top suggestion:
/// always, or only when the top candidate's posterior standard deviation
/// exceeds `threshold`.
struct HitlTrigger {
  enum class Mode { always, uncertainty };
  Mode mode = Mode::always;
  double threshold = 0.0;

  nlohmann::json to_json() const;
  static HitlTrigger from_json(const nlohmann::json& j);
};

struct StudyConfig {
  Direction direction = Direction::maximize;
  AcquisitionSpec acquisition;
  /// Kernel/mean/noise template; when absent default_surrogate(space) is used.
  std::optional<GPHyperparams> surrogate;
  std::size_t n_init = 10;
  InitMethod init_method = InitMethod::random;
  std::size_t q = 1;
  SearchStrategy strategy;
  StoppingRule stopping;
  std::uint64_t seed = 0;
  /// Hyperparameters are re-optimized on every k-th model-based suggestion
  /// (warm-started from the previous fit); in between they are reused.
  std::size_t refit_every = 1;
  HyperfitConfig hyperfit;
  HitlTrigger hitl;

  void validate() const;
  nlohmann::json to_json() const;
  static StudyConfig from_json(const nlohmann::json& j);
};

/// RBF with one lengthscale per scalar embedded coordinate, multiplied by a
/// categorical overlap kernel per one-hot block; zero mean, noise 1e-6.
GPHyperparams default_surrogate(const DesignSpace& space);

struct SlateEntry {
  DesignPoint x;
  double score = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

enum class RecommendMode { observed, model };

std::string to_string(RecommendMode m);
RecommendMode recommend_mode_from_string(const std::string& s);

/// Clock used to stamp observations; returns an ISO-8601 string.
using Clock = std::function<std::string()>;
std::string utc_now();

/// The optimization ledger: a design space, its configuration, the
/// observation history and outstanding suggestions.
///
/// Every random choice is drawn from a stream derived from the seed and the
/// current history length, and all model state that influences the next
/// suggestion (hyperparameter cache, refit counter) is persisted, so a study
/// reloaded from to_json() continues exactly as the original would have.
class Study {
 public:
  enum class State { initializing, running, stopped };

  Study(DesignSpace space, StudyConfig config, Clock clock = utc_now);

  const DesignSpace& space() const { return space_; }
  const StudyConfig& config() const { return config_; }
  const std::vector<Observation>& history() const { return history_; }
  const std::vector<PendingSuggestion>& pending() const { return pending_; }
  State state() const { return state_; }
  std::uint64_t revision() const { return revision_; }
  std::optional<Incumbent> incumbent() const;
  std::optional<double> last_max_acquisition() const { return last_max_acquisition_; }
  void set_clock(Clock clock) { clock_ = std::move(clock); }

  /// Next q points (config.q when q == 0). Returns the outstanding pending
  /// set unchanged if there is one; otherwise initial-design points while
  /// fewer than n_init observations exist (possibly fewer than q), then
  /// model-based suggestions. Throws StateError on a stopped study.
  std::vector<DesignPoint> suggest(std::size_t q = 0);
  /// Records an evaluation. A matching pending entry is cleared and lends
  /// its source when none is given; an unsolicited point is a human
  /// override. Throws ValidationError for infeasible x or non-finite y and
  /// StateError on a stopped study.
  const Observation& observe(const DesignPoint& x, double y, std::optional<Source> source = std::nullopt);
  /// Drops all outstanding suggestions.
  void discard_pending();
  void stop();

  /// Top-k candidates by acquisition with posterior annotations, computed
  /// exactly as the next model-based suggest would (k = 1 gives its pick).
  /// Does not modify the study. Throws StateError when stopped or still
  /// initializing.
  std::vector<SlateEntry> hitl_slate(std::size_t k) const;
  /// Whether the configured HITL trigger asks for human review now.
  bool hitl_review_needed() const;

  /// observed: the incumbent; model: argmax of the posterior mean over the
  /// observed inputs followed by a random pool. Throws StateError if empty.
  DesignPoint recommend_best(RecommendMode mode = RecommendMode::observed) const;

  bool should_stop(const StoppingRule& rule) const;
  bool should_stop() const { return should_stop(config_.stopping); }

  /// Surrogate that the next model-based suggestion will use.
  struct PreparedModel {
    GPModel model;
    GPHyperparams hyperparams;
    bool refitted = false;
  };
  PreparedModel prepare_model() const;
  /// Random stream and acquisition context of the next model-based suggestion.
  Rng suggestion_rng() const;
  AcquisitionContext acquisition_context() const;

  nlohmann::json to_json() const;
  static Study from_json(const nlohmann::json& j, Clock clock = utc_now);

  static constexpr int kVersion = 1;

 private:
  DesignPoint init_point(std::size_t index) const;
  GPHyperparams family() const;
  void update_state();

  DesignSpace space_;
  StudyConfig config_;
  Clock clock_;
  std::vector<Observation> history_;
  std::vector<PendingSuggestion> pending_;
  State state_ = State::initializing;
  std::size_t init_cursor_ = 0;
  std::size_t model_rounds_ = 0;
  std::optional<GPHyperparams> hyper_cache_;
  std::optional<double> last_max_acquisition_;
  std::uint64_t revision_ = 0;
};

std::string to_string(Study::State s);

using Evaluator = std::function<double(const DesignPoint&)>;

/// suggest -> evaluate -> observe until `rule` fires, then stops the study.
/// With a budget, batches are trimmed so the budget is met exactly.
/// `checkpoint` runs after every observation (e.g. to persist); an evaluator
/// exception propagates with the study left at its last observation.
void run(Study& study, const Evaluator& evaluator, const StoppingRule& rule,
         const std::function<void(const Study&)>& checkpoint = {});

}  // namespace smbo
