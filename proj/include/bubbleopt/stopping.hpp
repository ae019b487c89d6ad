#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bubbleopt/models.hpp"
#include "bubbleopt/montecarlo.hpp"
#include "bubbleopt/payoff.hpp"

namespace bubbleopt {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// Conditional support [m_t, M_t] of the future price path, for the model
/// classes where it can be written down.
struct SupportOracle {
  enum class Class { FullSupport, Deterministic };

  Class model_class = Class::FullSupport;
  /// (m, M) at time t; M = +inf for unbounded support. Deterministic in t for
  /// both registered classes.
  std::function<std::pair<double, double>(double)> envelope;
  /// Earliest time after which beta no longer decreases.
  double beta_flat_from = 0.0;
  /// Times at which the envelope can change; triggers are evaluated there.
  std::vector<double> critical_times;
};

/// Throws ValidationError for models without a registered oracle.
SupportOracle support_oracle(const ModelSpec& model);

enum class Trigger { TauK, AffineInterval, Coalesce, Horizon };

std::string to_string(Trigger t);

struct TauStarResult {
  StoppingRule rule;
  Trigger trigger = Trigger::Horizon;
  double time = 0.0;
  /// Affine interval whose trigger fired (AffineInterval only).
  std::optional<AffineInterval> interval;
  /// Candidate times; kNever when the trigger never fires before the horizon.
  double tau_k = kNever;
  double tau_tilde = 0.0;
  std::vector<double> tau_i;
  double tau_0 = kNever;
  /// Line-by-line derivation.
  std::vector<std::string> certificate;
};

TauStarResult tau_star(const ModelSpec& model, const PayoffSpec& payoff);

/// Pathwise check of the structural property of tau*: on {tau* < tau_K}
/// beta is flat after tau* and S stays in [l(S_tau*), r(S_tau*)]; on
/// {tau* = tau_K} S stays at or below K. Returns the number of violating paths.
std::size_t verify_certificate(const PathEnsemble& ensemble, const TauStarResult& ts, const PayoffSpec& payoff);

enum class OptimalityKind { Optimal, NotOptimal, Inconclusive };

struct OptimalityVerdict {
  OptimalityKind kind = OptimalityKind::Inconclusive;
  std::string reason;
};

std::string to_string(OptimalityKind k);

/// A rule is optimal iff it never stops before tau* and its default is zero.
OptimalityVerdict check_optimality(const PathEnsemble& ensemble, const StoppingRule& rule, const TauStarResult& ts,
                                   const DefaultEstimate& delta_of_rule);

enum class Existence { Exists, DoesNotExist, Inconclusive };

std::string to_string(Existence e);

/// Optimal times exist iff delta(tau*) = 0.
Existence existence_verdict(const TauStarResult& ts, const DefaultEstimate& delta_at_tau_star);

}  // namespace bubbleopt
