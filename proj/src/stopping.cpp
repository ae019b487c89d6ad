#include "bubbleopt/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/parallel.hpp"

namespace bubbleopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string fmt(double x) {
  if (x == kNever) return "never";
  std::ostringstream os;
  os << x;
  return os.str();
}

SupportOracle full_support(double beta_flat_from) {
  SupportOracle o;
  o.model_class = SupportOracle::Class::FullSupport;
  o.envelope = [](double) { return std::pair{0.0, kNever}; };
  o.beta_flat_from = beta_flat_from;
  o.critical_times = {0.0};
  return o;
}

SupportOracle constant_support(double s) {
  SupportOracle o;
  o.model_class = SupportOracle::Class::Deterministic;
  o.envelope = [s](double) { return std::pair{s, s}; };
  o.beta_flat_from = 0.0;
  o.critical_times = {0.0};
  return o;
}

/// Last time before T at which the short rate is positive, i.e. the time from
/// which beta stays constant.
double rate_flat_from(const RateCurve& rate, double T) {
  double flat = 0.0;
  double start = 0.0;
  for (std::size_t j = 0; j < rate.rates().size() && start < T; ++j) {
    const double end = j < rate.times().size() ? std::min(rate.times()[j], T) : T;
    if (rate.rates()[j] > 0.0 && end > start) flat = end;
    start = end;
  }
  return flat;
}

}  // namespace

SupportOracle support_oracle(const ModelSpec& model) {
  model.validate();
  return std::visit(
      overloaded{
          [&](const ReciprocalBessel3D&) { return full_support(0.0); },
          [&](const Bessel3D&) { return full_support(0.0); },
          [&](const LocalVolDiffusion& m) {
            if (!m.vol.identically_zero()) return full_support(rate_flat_from(m.rate, model.horizon));
            if (m.rate.is_zero()) return constant_support(m.s0);
            throw ValidationError("no support oracle registered for a noiseless local-vol model with a nonzero rate");
          },
          [&](const DeterministicJump& m) {
            SupportOracle o;
            o.model_class = SupportOracle::Class::Deterministic;
            const double lo = std::min(m.s_pre, m.s_post);
            const double hi = std::max(m.s_pre, m.s_post);
            const double t0 = m.t0;
            const double post = m.s_post;
            o.envelope = [=](double t) { return t < t0 ? std::pair{lo, hi} : std::pair{post, post}; };
            o.beta_flat_from = m.beta_post < m.beta_pre ? t0 : 0.0;
            o.critical_times = {0.0, t0};
            return o;
          },
      },
      model.dynamics);
}

std::string to_string(Trigger t) {
  switch (t) {
    case Trigger::TauK:
      return "TauK";
    case Trigger::AffineInterval:
      return "AffineInterval";
    case Trigger::Coalesce:
      return "Coalesce";
    case Trigger::Horizon:
      return "Horizon";
  }
  return "?";
}

TauStarResult tau_star(const ModelSpec& model, const PayoffSpec& payoff) {
  const SupportOracle oracle = support_oracle(model);
  const double T = model.horizon;
  const double K = threshold_k(payoff);
  const std::vector<AffineInterval> intervals = affine_intervals(payoff);

  TauStarResult res;
  res.tau_tilde = oracle.beta_flat_from;
  res.tau_i.assign(intervals.size(), kNever);
  auto& cert = res.certificate;
  cert.push_back("model: " + model.describe());
  cert.push_back("payoff: " + payoff.describe() + ", K = " + fmt(K));
  {
    std::string s = "affine intervals:";
    for (const auto& I : intervals) s += " " + I.describe();
    cert.push_back(s);
  }
  cert.push_back(oracle.model_class == SupportOracle::Class::FullSupport
                     ? "support oracle: full support, [m, M] = [0, inf) at every time"
                     : "support oracle: deterministic price path, exact envelopes");
  cert.push_back("beta flat from t = " + fmt(res.tau_tilde));

  std::vector<double> times = oracle.critical_times;
  times.push_back(oracle.beta_flat_from);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  for (double t : times) {
    if (t > T) break;
    const auto [m, M] = oracle.envelope(t);
    cert.push_back("t = " + fmt(t) + ": m = " + fmt(m) + ", M = " + fmt(M));
    if (res.tau_k == kNever && M <= K) res.tau_k = t;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      if (res.tau_i[i] == kNever && intervals[i].contains(m) && intervals[i].contains(M))
        res.tau_i[i] = std::max(res.tau_tilde, t);
    }
    if (res.tau_0 == kNever && m == M) res.tau_0 = t;
  }

  cert.push_back("tau_K = " + fmt(res.tau_k));
  for (std::size_t i = 0; i < intervals.size(); ++i)
    cert.push_back("tau^" + std::to_string(i + 1) + " on " + intervals[i].describe() + " = " + fmt(res.tau_i[i]));
  cert.push_back("tau^0 = " + fmt(res.tau_0));

  // Minimum with ties broken in the order TauK, AffineInterval, Coalesce.
  double best = res.tau_k;
  Trigger trig = Trigger::TauK;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (res.tau_i[i] < best) {
      best = res.tau_i[i];
      trig = Trigger::AffineInterval;
      res.interval = intervals[i];
    }
  }
  if (res.tau_0 < best) {
    best = res.tau_0;
    trig = Trigger::Coalesce;
    res.interval.reset();
  }
  if (!(best < T)) {
    best = T;
    trig = Trigger::Horizon;
    res.interval.reset();
  }
  if (trig != Trigger::AffineInterval) res.interval.reset();
  res.time = best;
  res.trigger = trig;
  res.rule = FixedTime{best};
  std::string line = "tau* = " + fmt(best) + " via " + to_string(trig);
  if (res.interval) line += " " + res.interval->describe();
  cert.push_back(line);
  return res;
}

std::size_t verify_certificate(const PathEnsemble& ensemble, const TauStarResult& ts, const PayoffSpec& payoff) {
  if (ts.trigger == Trigger::Horizon) return 0;
  const double K = threshold_k(payoff);
  auto chunk = [&](std::size_t begin, std::size_t end) {
    std::size_t bad = 0;
    PathBundle p;
    for (std::size_t i = begin; i < end; ++i) {
      ensemble.realize(i, p);
      const Eigen::Index k0 = stop_index(ts.rule, ensemble, i, p);
      const Eigen::Index n = p.s.size();
      bool ok = true;
      if (ts.trigger == Trigger::TauK) {
        for (Eigen::Index k = k0; k < n && ok; ++k) ok = p.s[k] <= K;
      } else {
        const AffineInterval I = affine_interval(payoff, p.s[k0]);
        for (Eigen::Index k = k0; k < n && ok; ++k) ok = p.beta[k] == p.beta[k0] && I.contains(p.s[k]);
      }
      if (!ok) ++bad;
    }
    return bad;
  };
  const auto counts = parallel::map_chunks(ensemble.size(), chunk);
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::string to_string(OptimalityKind k) {
  switch (k) {
    case OptimalityKind::Optimal:
      return "Optimal";
    case OptimalityKind::NotOptimal:
      return "NotOptimal";
    case OptimalityKind::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

OptimalityVerdict check_optimality(const PathEnsemble& ensemble, const StoppingRule& rule, const TauStarResult& ts,
                                   const DefaultEstimate& delta_of_rule) {
  validate_rule(rule, ensemble);
  std::size_t early = 0;
  const auto* fixed = std::get_if<FixedTime>(&rule);
  const auto* fixed_star = std::get_if<FixedTime>(&ts.rule);
  if (fixed && fixed_star) {
    early = ensemble.index_at_or_after(fixed->t) < ensemble.index_at_or_after(fixed_star->t) ? ensemble.size() : 0;
  } else {
    auto chunk = [&](std::size_t begin, std::size_t end) {
      std::size_t c = 0;
      PathBundle p;
      for (std::size_t i = begin; i < end; ++i) {
        ensemble.realize(i, p);
        if (stop_index(rule, ensemble, i, p) < stop_index(ts.rule, ensemble, i, p)) ++c;
      }
      return c;
    };
    const auto counts = parallel::map_chunks(ensemble.size(), chunk);
    early = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  }

  if (early > 0) {
    return {OptimalityKind::NotOptimal, "rule stops before tau* on " + std::to_string(early) + " of " +
                                            std::to_string(ensemble.size()) + " paths (tau_hat < tau*)"};
  }
  if (delta_of_rule.verdict == DefaultVerdict::Inconclusive)
    return {OptimalityKind::Inconclusive, "default estimate of the rule is inconclusive"};
  std::ostringstream os;
  os << "delta = " << delta_of_rule.delta_hat << " +/- " << delta_of_rule.ci_halfwidth;
  if (delta_of_rule.zero_within_ci()) return {OptimalityKind::Optimal, "tau_hat >= tau* and " + os.str()};
  return {OptimalityKind::NotOptimal, "delta > 0: " + os.str()};
}

std::string to_string(Existence e) {
  switch (e) {
    case Existence::Exists:
      return "Exists";
    case Existence::DoesNotExist:
      return "DoesNotExist";
    case Existence::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

Existence existence_verdict(const TauStarResult&, const DefaultEstimate& d) {
  if (d.verdict == DefaultVerdict::Inconclusive) return Existence::Inconclusive;
  return d.zero_within_ci() ? Existence::Exists : Existence::DoesNotExist;
}

}  // namespace bubbleopt
