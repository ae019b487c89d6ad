#pragma once

// Closed forms for the reciprocal of a 3-D Bessel process started at x,
// dS = -S^2 dB: a strict local martingale with E[S_T | S_t = x] < x.

#include <cmath>
#include <numbers>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/normal.hpp"

namespace bubbleopt {

namespace detail {
template <typename Scalar>
Scalar remaining_time(Scalar t, Scalar T) {
  if (!(t < T)) throw ValidationError("closed form requires t < T");
  if (t < Scalar(0)) throw ValidationError("closed form requires t >= 0");
  return T - t;
}
}  // namespace detail

/// x - E[S_T | S_t = x] = 2x Phi(-1/(x sqrt(T-t))).
template <typename Scalar>
Scalar martingale_defect(Scalar x, Scalar t, Scalar T) {
  using std::sqrt;
  const Scalar tau = detail::remaining_time(t, T);
  if (!(x > Scalar(0))) throw ValidationError("martingale_defect requires x > 0");
  return Scalar(2) * x * normal_cdf(-Scalar(1) / (x * sqrt(tau)));
}

/// E[S_T | S_t = x].
template <typename Scalar>
Scalar bessel_reciprocal_mean(Scalar x, Scalar t, Scalar T) {
  using std::sqrt;
  const Scalar tau = detail::remaining_time(t, T);
  if (!(x > Scalar(0))) throw ValidationError("bessel_reciprocal_mean requires x > 0");
  // x (1 - 2 Phi(-u)) = x erf(u / sqrt 2), which keeps precision for large x.
  using std::erf;
  const Scalar u = Scalar(1) / (x * sqrt(tau));
  return x * erf(u / std::numbers::sqrt2_v<Scalar>);
}

/// lim_{x -> inf} E[(S_T - K)_+ | S_t = x].
template <typename Scalar>
Scalar european_call_limit(Scalar K, Scalar t, Scalar T) {
  using std::sqrt;
  const Scalar tau = detail::remaining_time(t, T);
  if (!(K > Scalar(0))) throw ValidationError("european_call_limit requires K > 0");
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  return Scalar(2) / sqrt(two_pi * tau) - K * (Scalar(2) * normal_cdf(Scalar(1) / (K * sqrt(tau))) - Scalar(1));
}

/// lim_{x -> inf} [a(x,t) - (x-K)_+] = 2K [1 - Phi(1/(K sqrt(T-t)))].
template <typename Scalar>
Scalar american_call_far_field_gap(Scalar K, Scalar t, Scalar T) {
  using std::sqrt;
  const Scalar tau = detail::remaining_time(t, T);
  if (!(K > Scalar(0))) throw ValidationError("american_call_far_field_gap requires K > 0");
  return Scalar(2) * K * normal_cdf(-Scalar(1) / (K * sqrt(tau)));
}

/// P[sup_{u in [t, T]} S_u >= level | S_t = x] for level > x. The 3-D
/// Brownian motion |w + B| with |w| = 1/x must enter the ball of radius
/// 1/level, which happens by time tau with probability
/// (x/level) * 2 Phi(-(1/x - 1/level)/sqrt(tau)).
template <typename Scalar>
Scalar bessel_reciprocal_hitting_probability(Scalar x, Scalar level, Scalar t, Scalar T) {
  using std::sqrt;
  const Scalar tau = detail::remaining_time(t, T);
  if (!(x > Scalar(0)) || !(level > Scalar(0))) throw ValidationError("hitting probability needs positive x and level");
  if (level <= x) return Scalar(1);
  return (x / level) * Scalar(2) * normal_cdf(-(Scalar(1) / x - Scalar(1) / level) / sqrt(tau));
}

}  // namespace bubbleopt
