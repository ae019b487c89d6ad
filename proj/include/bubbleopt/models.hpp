#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "bubbleopt/closed_form.hpp"
#include "bubbleopt/payoff.hpp"
#include "bubbleopt/vol.hpp"

namespace bubbleopt {

// ---------------------------------------------------------------------------
// Price dynamics

/// S = 1/|w + B| for a 3-D Brownian motion B with |w| = 1/s0; beta = 1.
struct ReciprocalBessel3D {
  double s0 = 1.0;
};

/// S = |w + B| with |w| = s0; beta = 1. Only meaningful together with the
/// ReciprocalOfPrice deflator, which makes L = Z beta S identically one.
struct Bessel3D {
  double s0 = 1.0;
};

/// dS = r(t) S dt + alpha(S) dB under the pricing measure; beta = exp(-int r).
struct LocalVolDiffusion {
  double s0 = 1.0;
  RateCurve rate;
  VolFunction vol{PowerVol{}};
};

/// Deterministic S and beta that jump once at t0; all randomness sits in Z.
struct DeterministicJump {
  double t0 = 0.5;
  double s_pre = 1.0;
  double s_post = 4.0;
  double beta_pre = 1.0;
  double beta_post = 0.25;
};

using PriceDynamics = std::variant<ReciprocalBessel3D, Bessel3D, LocalVolDiffusion, DeterministicJump>;

// ---------------------------------------------------------------------------
// Deflators

struct TriviallyOne {};
/// Z = 1/|w + B'| with |w| = 1/z0, driven independently of S.
struct ReciprocalBesselDeflator {
  double z0 = 1.0;
};
/// Z = 1/S on the same driver (requires Bessel3D dynamics with s0 = 1).
struct ReciprocalOfPrice {};

using DeflatorSpec = std::variant<TriviallyOne, ReciprocalBesselDeflator, ReciprocalOfPrice>;

/// Market model: the price process, the discount factor it implies, and the
/// deflator Z, on the finite horizon [0, horizon].
struct ModelSpec {
  PriceDynamics dynamics;
  DeflatorSpec deflator = TriviallyOne{};
  double horizon = 1.0;

  /// Throws ValidationError on inconsistent specifications.
  void validate() const;
  double s0() const;
  double beta(double t) const;
  /// Z is a uniformly integrable martingale on the horizon (only Z = 1 here).
  bool deflator_is_ui_martingale() const;
  std::string describe() const;
};

// ---------------------------------------------------------------------------
// Paths

/// One realization on the ensemble's time grid.
struct PathBundle {
  Eigen::ArrayXd s, beta, z, y, l;
};

/// X = Y g(S) along a path.
Eigen::ArrayXd payoff_process(const PathBundle& path, const PayoffSpec& payoff);

/// An immutable, lazily realized collection of independent paths.
///
/// Path i is drawn from Philox stream (seed, i), so `path(i)` returns the same
/// bundle on every call, on any thread. Sweeps regenerate paths instead of
/// storing them, which keeps memory at O(steps) per worker.
class PathEnsemble {
 public:
  PathEnsemble(ModelSpec model, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed);

  const ModelSpec& model() const { return model_; }
  const Eigen::ArrayXd& time_grid() const { return grid_; }
  std::size_t size() const { return n_paths_; }
  std::size_t steps() const { return n_steps_; }
  std::uint64_t seed() const { return seed_; }
  double horizon() const { return model_.horizon; }

  PathBundle path(std::size_t i) const;
  /// Fills `out` in place, reusing its storage.
  void realize(std::size_t i, PathBundle& out) const;

  /// Smallest grid index whose time is >= t (up to rounding); t in [0, T].
  Eigen::Index index_at_or_after(double t) const;

 private:
  ModelSpec model_;
  std::size_t n_paths_;
  std::size_t n_steps_;
  std::uint64_t seed_;
  Eigen::ArrayXd grid_;
};

PathEnsemble simulate_paths(const ModelSpec& model, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Strictness of beta S under the pricing measure

enum class StrictnessStatus { Strict, TrueMartingale, QuadratureFailed };

struct StrictnessDiagnostic {
  bool strict = false;
  StrictnessStatus status = StrictnessStatus::QuadratureFailed;
  /// int_1^inf x / alpha(x)^2 dx; +inf when the tail test declares divergence.
  double integral = 0.0;
  double integral_error = 0.0;
  /// Fitted slope of log(x / alpha^2) against log x on [1e3, 1e6].
  double tail_slope = 0.0;
};

/// Feller-type test: beta S is a strict local martingale iff
/// int_1^inf x / alpha^2(x) dx < inf. Power tails are classified exactly;
/// tails that differ from 1/x by slowly varying factors (1/(x log x)) cannot
/// be resolved from finitely many samples and may be reported as strict.
StrictnessDiagnostic is_strict_local_martingale(const std::function<double(double)>& vol);

}  // namespace bubbleopt
