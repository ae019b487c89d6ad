#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bubbleopt/models.hpp"
#include "bubbleopt/payoff.hpp"
#include "bubbleopt/statistics.hpp"

namespace bubbleopt {

// ---------------------------------------------------------------------------
// Stopping rules on the simulation grid. Every variant decides at grid index
// i from path values at indices <= i, so rules are nonanticipating by
// construction.

struct FixedTime {
  double t = 0.0;
};

enum class Direction { Up, Down };

/// First grid time at or after `activation` with S >= threshold (Up) or
/// S <= threshold (Down), capped at `deadline` (the horizon when unset).
struct HittingTime {
  double threshold = 1.0;
  Direction direction = Direction::Up;
  double activation = 0.0;
  std::optional<double> deadline;
};

/// Explicit per-path grid index, e.g. a rule computed elsewhere.
struct PathwiseIndex {
  std::vector<Eigen::Index> index;
};

using StoppingRule = std::variant<FixedTime, HittingTime, PathwiseIndex>;

/// tau ^ t for a deterministic time t.
StoppingRule earliest(const StoppingRule& rule, double t, const PathEnsemble& ensemble);
std::string describe(const StoppingRule& rule);
/// Throws ValidationError when the rule refers to times or paths outside the ensemble.
void validate_rule(const StoppingRule& rule, const PathEnsemble& ensemble);
/// Grid index at which `rule` stops path `path_id`.
Eigen::Index stop_index(const StoppingRule& rule, const PathEnsemble& ensemble, std::size_t path_id, const PathBundle& path);

// ---------------------------------------------------------------------------
// Localization

enum class LocalizedProcess { L, Z };

/// Levels n_1 < ... < n_k for sigma^n = first grid time the target reaches n.
struct LocalizingSchedule {
  std::vector<double> levels;
  LocalizedProcess target = LocalizedProcess::L;

  void validate() const;
};

/// sigma^n per path (rows) and level (columns); -1 where the level is never reached.
Eigen::ArrayXXi hitting_times(const PathEnsemble& ensemble, const LocalizingSchedule& sched);

// ---------------------------------------------------------------------------
// Estimators

enum class EstimatorKind {
  /// Sample mean of X_sigma 1{tau > sigma}.
  Plain,
  /// Same sample with L_{tau ^ sigma} (Z when localizing Z) as a control
  /// variate; its mean is the known starting value. The coefficient is the
  /// ratio E[X_sigma 1{sigma < tau}] / E[target_sigma 1{sigma < tau}].
  MartingaleControl,
};

enum class DefaultVerdict { Plateau, Extrapolated, Inconclusive };

std::string to_string(DefaultVerdict v);

struct LevelEstimate {
  double level = 0.0;
  /// Estimate of E[X_sigma 1{tau > sigma}] with the selected estimator.
  double estimate = 0.0;
  double std_error = 0.0;
  double plain_estimate = 0.0;
  double plain_std_error = 0.0;
  /// E[X_{tau ^ sigma}], nondecreasing in the level.
  double stopped_payoff = 0.0;
  double stopped_payoff_std_error = 0.0;
  /// Fraction of paths with sigma < tau.
  double hit_fraction = 0.0;
};

struct DefaultEstimate {
  std::vector<LevelEstimate> per_level;
  double delta_hat = 0.0;
  double std_error = 0.0;
  /// Three standard errors.
  double ci_halfwidth = 0.0;
  DefaultVerdict verdict = DefaultVerdict::Inconclusive;
  EstimatorKind estimator = EstimatorKind::MartingaleControl;

  bool zero_within_ci() const { return delta_hat <= ci_halfwidth; }
  bool positive_beyond_ci() const { return delta_hat > ci_halfwidth; }
};

/// Verdict from the per-level sequence alone. Plateau when the top two
/// levels have overlapping 3-sigma intervals and differ by at most 10% of
/// the top value; otherwise c - b/n is fitted to the top three levels.
/// Inconclusive when the sequence still rises by more than the top interval.
DefaultEstimate summarize_levels(std::vector<LevelEstimate> per_level, EstimatorKind kind);

/// Sample mean of X_tau.
Estimate expected_payoff(const PathEnsemble& ensemble, const StoppingRule& rule, const PayoffSpec& payoff);

/// Monte Carlo estimates of E[X_tau] for several rules from one sweep.
std::vector<Estimate> expected_payoffs(const PathEnsemble& ensemble, const std::vector<StoppingRule>& rules,
                                       const PayoffSpec& payoff);

DefaultEstimate estimate_delta(const PathEnsemble& ensemble, const StoppingRule& rule, const LocalizingSchedule& sched,
                               const PayoffSpec& payoff, EstimatorKind kind = EstimatorKind::MartingaleControl);

/// L_0 - E[L_tau]; valid only when Z is a uniformly integrable martingale.
Estimate delta_closed_form_ui_martingale(const PathEnsemble& ensemble, const StoppingRule& rule);

struct ValueEstimate {
  double v_hat = 0.0;
  /// Sum of the two component standard errors, an upper bound whatever their correlation.
  double std_error = 0.0;
  Estimate payoff_at_tau_star;
  DefaultEstimate delta_at_tau_star;

  double v_horizon = 0.0;
  double std_error_horizon = 0.0;
  Estimate payoff_at_horizon;
  DefaultEstimate delta_at_horizon;

  bool inconclusive() const {
    return delta_at_tau_star.verdict == DefaultVerdict::Inconclusive ||
           delta_at_horizon.verdict == DefaultVerdict::Inconclusive;
  }
};

/// v = E[X_tau*] + delta(tau*), together with E[X_T] + delta(T) from the same paths.
ValueEstimate value_theorem1(const PathEnsemble& ensemble, const StoppingRule& tau_star, const LocalizingSchedule& sched,
                             const PayoffSpec& payoff, EstimatorKind kind = EstimatorKind::MartingaleControl);

/// Sample means of W_t = Y_t gbar(S_t) at the given times.
std::vector<Estimate> gbar_process_means(const PathEnsemble& ensemble, const PayoffSpec& payoff,
                                         const std::vector<double>& times);

/// Sample mean of f(S_T).
Estimate terminal_mean(const PathEnsemble& ensemble, const std::function<double(double)>& f);

/// CSV: header "level,estimate,stderr", one row per level, then the summary
/// rows "delta_hat,<value>,<ci>" and "verdict,<name>,".
void write_delta_csv(std::ostream& os, const DefaultEstimate& d);

}  // namespace bubbleopt
