#include "bubbleopt/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/parallel.hpp"

namespace bubbleopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

using Blocks = std::vector<Comoments>;

/// Realizes every path once and accumulates one observation vector per block.
/// `observe(path_id, path, obs)` fills obs[b] for each block b.
template <typename Observe>
Blocks sweep(const PathEnsemble& ensemble, const std::vector<Eigen::Index>& dims, Observe&& observe) {
  auto chunk = [&](std::size_t begin, std::size_t end) {
    Blocks acc;
    std::vector<Eigen::VectorXd> obs;
    for (Eigen::Index d : dims) {
      acc.emplace_back(d);
      obs.emplace_back(Eigen::VectorXd::Zero(d));
    }
    PathBundle path;
    for (std::size_t i = begin; i < end; ++i) {
      ensemble.realize(i, path);
      observe(i, path, obs);
      for (std::size_t b = 0; b < acc.size(); ++b) acc[b].push(obs[b]);
    }
    return acc;
  };
  auto merge = [](const Blocks& a, const Blocks& b) {
    Blocks out;
    out.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(Comoments::merge(a[i], b[i]));
    return out;
  };
  return parallel::pairwise_reduce(parallel::map_chunks(ensemble.size(), chunk), merge);
}

const Eigen::ArrayXd& target_of(const PathBundle& p, LocalizedProcess target) {
  return target == LocalizedProcess::L ? p.l : p.z;
}

double target_start(const PathEnsemble& ensemble, LocalizedProcess target) {
  // beta_0 = Z_0 = 1 in every supported model, so L_0 = S_0.
  return target == LocalizedProcess::L ? ensemble.model().s0() : 1.0;
}

/// First grid index at which `a` reaches each (increasing) level; -1 if never.
void first_hits(const Eigen::ArrayXd& a, const std::vector<double>& levels, std::vector<Eigen::Index>& out) {
  out.assign(levels.size(), -1);
  std::size_t j = 0;
  for (Eigen::Index k = 0; k < a.size() && j < levels.size(); ++k) {
    while (j < levels.size() && a[k] >= levels[j]) out[j++] = k;
  }
}

double payoff_at(const PathBundle& p, const PayoffSpec& payoff, Eigen::Index k) { return p.y[k] * payoff.value(p.s[k]); }

// Layout of the per-rule observation block used by the delta estimators.
constexpr Eigen::Index kPayoffSlot = 0;
constexpr Eigen::Index kLocalSlot = 1;
constexpr Eigen::Index kLevelBase = 2;
constexpr Eigen::Index kPerLevel = 5;
Eigen::Index slot_p(std::size_t j) { return kLevelBase + kPerLevel * static_cast<Eigen::Index>(j); }
Eigen::Index slot_c(std::size_t j) { return slot_p(j) + 1; }
Eigen::Index slot_c_hit(std::size_t j) { return slot_p(j) + 2; }
Eigen::Index slot_stopped(std::size_t j) { return slot_p(j) + 3; }
Eigen::Index slot_hit(std::size_t j) { return slot_p(j) + 4; }

void observe_rule(const StoppingRule& rule, const PathEnsemble& ensemble, std::size_t id, const PathBundle& p,
                  const PayoffSpec& payoff, const LocalizingSchedule& sched, const std::vector<Eigen::Index>& sigma,
                  Eigen::VectorXd& obs) {
  const Eigen::Index tau = stop_index(rule, ensemble, id, p);
  const Eigen::ArrayXd& target = target_of(p, sched.target);
  obs[kPayoffSlot] = payoff_at(p, payoff, tau);
  obs[kLocalSlot] = p.l[tau];
  for (std::size_t j = 0; j < sched.levels.size(); ++j) {
    const bool hit_first = sigma[j] >= 0 && sigma[j] < tau;
    const Eigen::Index stopped = hit_first ? sigma[j] : tau;
    obs[slot_p(j)] = hit_first ? payoff_at(p, payoff, sigma[j]) : 0.0;
    obs[slot_c(j)] = target[stopped];
    obs[slot_c_hit(j)] = hit_first ? target[stopped] : 0.0;
    obs[slot_stopped(j)] = payoff_at(p, payoff, stopped);
    obs[slot_hit(j)] = hit_first ? 1.0 : 0.0;
  }
}

Estimate estimate_from(const Comoments& m, Eigen::Index i) { return {m.mean(i), m.standard_error(i)}; }

DefaultEstimate delta_from(const Comoments& m, const LocalizingSchedule& sched, double start, EstimatorKind kind) {
  const double n = m.count();
  std::vector<LevelEstimate> levels;
  for (std::size_t j = 0; j < sched.levels.size(); ++j) {
    const Eigen::Index ip = slot_p(j);
    const Eigen::Index ic = slot_c(j);
    LevelEstimate le;
    le.level = sched.levels[j];
    le.plain_estimate = m.mean(ip);
    le.plain_std_error = m.standard_error(ip);
    le.stopped_payoff = m.mean(slot_stopped(j));
    le.stopped_payoff_std_error = m.standard_error(slot_stopped(j));
    le.hit_fraction = m.mean(slot_hit(j));

    if (kind == EstimatorKind::Plain || n < 3.0) {
      le.estimate = le.plain_estimate;
      le.std_error = le.plain_std_error;
    } else {
      // Estimator A - (A/B)(Cbar - start) with A = mean P, B = mean C 1{hit}:
      // the coefficient is the average ratio X_sigma / target_sigma on paths
      // that hit first. Any fixed coefficient is unbiased because the stopped
      // target has mean `start`; the ratio keeps the correction pathwise exact
      // where X is proportional to the target, and it stays meaningful when
      // grid monitoring misses most hits of high levels.
      const Eigen::Index ih = slot_c_hit(j);
      const double a = m.mean(ip);
      const double b = m.mean(ih);
      const double excess = m.mean(ic) - start;
      if (b > 0.0) {
        const double coef = a / b;
        le.estimate = a - coef * excess;
        // Delta method on (A, B, Cbar).
        Eigen::Vector3d grad(1.0 - excess / b, a * excess / (b * b), -coef);
        const Eigen::Index idx[3] = {ip, ih, ic};
        Eigen::Matrix3d cov;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) cov(r, c) = m.scatter()(idx[r], idx[c]) / (n - 1.0);
        le.std_error = std::sqrt(std::max(0.0, grad.dot(cov * grad)) / n);
      } else {
        le.estimate = a;
        le.std_error = le.plain_std_error;
      }
    }
    levels.push_back(le);
  }
  return summarize_levels(std::move(levels), kind);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stopping rules

StoppingRule earliest(const StoppingRule& rule, double t, const PathEnsemble& ensemble) {
  return std::visit(
      overloaded{
          [&](const FixedTime& r) -> StoppingRule { return FixedTime{std::min(r.t, t)}; },
          [&](const HittingTime& r) -> StoppingRule {
            HittingTime out = r;
            out.deadline = std::min(r.deadline.value_or(ensemble.horizon()), t);
            return out;
          },
          [&](const PathwiseIndex& r) -> StoppingRule {
            const Eigen::Index cap = ensemble.index_at_or_after(t);
            PathwiseIndex out = r;
            for (auto& k : out.index) k = std::min(k, cap);
            return out;
          },
      },
      rule);
}

std::string describe(const StoppingRule& rule) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const FixedTime& r) { os << "FixedTime{t=" << r.t << "}"; },
                 [&](const HittingTime& r) {
                   os << "HittingTime{S " << (r.direction == Direction::Up ? ">=" : "<=") << " " << r.threshold
                      << ", from t=" << r.activation;
                   if (r.deadline) os << ", by t=" << *r.deadline;
                   os << "}";
                 },
                 [&](const PathwiseIndex& r) { os << "PathwiseIndex{" << r.index.size() << " paths}"; },
             },
             rule);
  return os.str();
}

void validate_rule(const StoppingRule& rule, const PathEnsemble& ensemble) {
  const double T = ensemble.horizon();
  auto check_time = [&](double t, const char* what) {
    if (!(t >= 0.0 && t <= T)) {
      std::ostringstream os;
      os << what << " " << t << " lies outside the simulation grid [0, " << T << "]";
      throw ValidationError(os.str());
    }
  };
  std::visit(overloaded{
                 [&](const FixedTime& r) { check_time(r.t, "stopping time"); },
                 [&](const HittingTime& r) {
                   check_time(r.activation, "activation time");
                   if (r.deadline) check_time(*r.deadline, "deadline");
                   if (!std::isfinite(r.threshold)) throw ValidationError("hitting threshold must be finite");
                 },
                 [&](const PathwiseIndex& r) {
                   if (r.index.size() != ensemble.size())
                     throw ValidationError("pathwise rule has " + std::to_string(r.index.size()) + " entries for " +
                                           std::to_string(ensemble.size()) + " paths");
                   for (Eigen::Index k : r.index)
                     if (k < 0 || k > static_cast<Eigen::Index>(ensemble.steps()))
                       throw ValidationError("pathwise rule index outside the grid");
                 },
             },
             rule);
}

Eigen::Index stop_index(const StoppingRule& rule, const PathEnsemble& ensemble, std::size_t path_id, const PathBundle& path) {
  return std::visit(overloaded{
                        [&](const FixedTime& r) { return ensemble.index_at_or_after(r.t); },
                        [&](const HittingTime& r) {
                          const Eigen::Index begin = ensemble.index_at_or_after(r.activation);
                          const Eigen::Index end = r.deadline ? ensemble.index_at_or_after(*r.deadline)
                                                              : static_cast<Eigen::Index>(ensemble.steps());
                          if (end <= begin) return end;
                          for (Eigen::Index k = begin; k < end; ++k) {
                            const bool hit =
                                r.direction == Direction::Up ? path.s[k] >= r.threshold : path.s[k] <= r.threshold;
                            if (hit) return k;
                          }
                          return end;
                        },
                        [&](const PathwiseIndex& r) { return r.index[path_id]; },
                    },
                    rule);
}

// ---------------------------------------------------------------------------
// Localization

void LocalizingSchedule::validate() const {
  if (levels.empty()) throw ValidationError("localizing schedule is empty");
  if (levels.size() < 3) throw ValidationError("localizing schedule needs at least 3 levels for the plateau test");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0) || !std::isfinite(levels[i])) throw ValidationError("schedule levels must be positive");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw ValidationError("schedule levels must be strictly increasing");
  }
}

Eigen::ArrayXXi hitting_times(const PathEnsemble& ensemble, const LocalizingSchedule& sched) {
  if (sched.levels.empty()) throw ValidationError("localizing schedule is empty");
  for (std::size_t i = 1; i < sched.levels.size(); ++i)
    if (!(sched.levels[i] > sched.levels[i - 1])) throw ValidationError("schedule levels must be strictly increasing");

  const auto k = static_cast<Eigen::Index>(sched.levels.size());
  auto chunk = [&](std::size_t begin, std::size_t end) {
    Eigen::ArrayXXi rows(static_cast<Eigen::Index>(end - begin), k);
    PathBundle path;
    std::vector<Eigen::Index> sigma;
    for (std::size_t i = begin; i < end; ++i) {
      ensemble.realize(i, path);
      first_hits(target_of(path, sched.target), sched.levels, sigma);
      for (Eigen::Index j = 0; j < k; ++j) rows(static_cast<Eigen::Index>(i - begin), j) = static_cast<int>(sigma[j]);
    }
    return rows;
  };
  const auto chunks = parallel::map_chunks(ensemble.size(), chunk);
  Eigen::ArrayXXi out(static_cast<Eigen::Index>(ensemble.size()), k);
  Eigen::Index row = 0;
  for (const auto& c : chunks) {
    out.middleRows(row, c.rows()) = c;
    row += c.rows();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimators

std::string to_string(DefaultVerdict v) {
  switch (v) {
    case DefaultVerdict::Plateau:
      return "Plateau";
    case DefaultVerdict::Extrapolated:
      return "Extrapolated";
    case DefaultVerdict::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

DefaultEstimate summarize_levels(std::vector<LevelEstimate> per_level, EstimatorKind kind) {
  if (per_level.size() < 3) throw ValidationError("at least 3 levels are needed to summarize a default estimate");
  DefaultEstimate out;
  out.estimator = kind;
  out.per_level = std::move(per_level);

  const std::size_t k = out.per_level.size();
  const LevelEstimate& top = out.per_level[k - 1];
  const LevelEstimate& prev = out.per_level[k - 2];
  const double increment = top.estimate - prev.estimate;
  const double ci_top = 3.0 * top.std_error;
  const double ci_prev = 3.0 * prev.std_error;

  double value = 0.0;
  double se = 0.0;
  if (std::abs(increment) <= ci_top + ci_prev && std::abs(increment) <= 0.1 * std::abs(top.estimate)) {
    out.verdict = DefaultVerdict::Plateau;
    value = top.estimate;
    se = top.std_error;
  } else {
    // OLS fit of e = c - b/n on the top three levels; c is a linear
    // combination sum w_i e_i of the level estimates.
    double xbar = 0.0;
    for (std::size_t i = k - 3; i < k; ++i) xbar += 1.0 / out.per_level[i].level / 3.0;
    double sxx = 0.0;
    for (std::size_t i = k - 3; i < k; ++i) sxx += std::pow(1.0 / out.per_level[i].level - xbar, 2);
    double var = 0.0;
    for (std::size_t i = k - 3; i < k; ++i) {
      const double x = 1.0 / out.per_level[i].level;
      const double w = 1.0 / 3.0 - xbar * (x - xbar) / sxx;
      value += w * out.per_level[i].estimate;
      var += w * w * out.per_level[i].std_error * out.per_level[i].std_error;
    }
    se = std::sqrt(var);
    out.verdict = increment > ci_top ? DefaultVerdict::Inconclusive : DefaultVerdict::Extrapolated;
  }
  out.delta_hat = std::max(0.0, value);
  out.std_error = se;
  out.ci_halfwidth = 3.0 * se;
  return out;
}

std::vector<Estimate> expected_payoffs(const PathEnsemble& ensemble, const std::vector<StoppingRule>& rules,
                                       const PayoffSpec& payoff) {
  for (const auto& r : rules) validate_rule(r, ensemble);
  const auto m = sweep(ensemble, {static_cast<Eigen::Index>(rules.size())},
                       [&](std::size_t id, const PathBundle& p, std::vector<Eigen::VectorXd>& obs) {
                         for (std::size_t r = 0; r < rules.size(); ++r)
                           obs[0][static_cast<Eigen::Index>(r)] = payoff_at(p, payoff, stop_index(rules[r], ensemble, id, p));
                       });
  std::vector<Estimate> out;
  for (std::size_t r = 0; r < rules.size(); ++r) out.push_back(estimate_from(m[0], static_cast<Eigen::Index>(r)));
  return out;
}

Estimate expected_payoff(const PathEnsemble& ensemble, const StoppingRule& rule, const PayoffSpec& payoff) {
  return expected_payoffs(ensemble, {rule}, payoff).front();
}

DefaultEstimate estimate_delta(const PathEnsemble& ensemble, const StoppingRule& rule, const LocalizingSchedule& sched,
                               const PayoffSpec& payoff, EstimatorKind kind) {
  sched.validate();
  validate_rule(rule, ensemble);
  const Eigen::Index dim = slot_p(sched.levels.size());
  const auto m = sweep(ensemble, {dim}, [&](std::size_t id, const PathBundle& p, std::vector<Eigen::VectorXd>& obs) {
    thread_local std::vector<Eigen::Index> hits;
    first_hits(target_of(p, sched.target), sched.levels, hits);
    observe_rule(rule, ensemble, id, p, payoff, sched, hits, obs[0]);
  });
  return delta_from(m[0], sched, target_start(ensemble, sched.target), kind);
}

Estimate delta_closed_form_ui_martingale(const PathEnsemble& ensemble, const StoppingRule& rule) {
  if (!ensemble.model().deflator_is_ui_martingale())
    throw ValidationError("L_0 - E[L_tau] equals delta only when Z is a uniformly integrable martingale; model: " +
                          ensemble.model().describe());
  validate_rule(rule, ensemble);
  const auto m = sweep(ensemble, {1}, [&](std::size_t id, const PathBundle& p, std::vector<Eigen::VectorXd>& obs) {
    obs[0][0] = p.l[stop_index(rule, ensemble, id, p)];
  });
  const double l0 = ensemble.model().s0();
  return {l0 - m[0].mean(0), m[0].standard_error(0)};
}

ValueEstimate value_theorem1(const PathEnsemble& ensemble, const StoppingRule& tau_star, const LocalizingSchedule& sched,
                             const PayoffSpec& payoff, EstimatorKind kind) {
  sched.validate();
  validate_rule(tau_star, ensemble);
  const StoppingRule horizon = FixedTime{ensemble.horizon()};
  const Eigen::Index dim = slot_p(sched.levels.size());
  const auto m = sweep(ensemble, {dim, dim}, [&](std::size_t id, const PathBundle& p, std::vector<Eigen::VectorXd>& obs) {
    thread_local std::vector<Eigen::Index> hits;
    first_hits(target_of(p, sched.target), sched.levels, hits);
    observe_rule(tau_star, ensemble, id, p, payoff, sched, hits, obs[0]);
    observe_rule(horizon, ensemble, id, p, payoff, sched, hits, obs[1]);
  });
  const double start = target_start(ensemble, sched.target);
  ValueEstimate v;
  v.payoff_at_tau_star = estimate_from(m[0], kPayoffSlot);
  v.delta_at_tau_star = delta_from(m[0], sched, start, kind);
  v.v_hat = v.payoff_at_tau_star.value + v.delta_at_tau_star.delta_hat;
  v.std_error = v.payoff_at_tau_star.std_error + v.delta_at_tau_star.std_error;

  v.payoff_at_horizon = estimate_from(m[1], kPayoffSlot);
  v.delta_at_horizon = delta_from(m[1], sched, start, kind);
  v.v_horizon = v.payoff_at_horizon.value + v.delta_at_horizon.delta_hat;
  v.std_error_horizon = v.payoff_at_horizon.std_error + v.delta_at_horizon.std_error;
  return v;
}

std::vector<Estimate> gbar_process_means(const PathEnsemble& ensemble, const PayoffSpec& payoff,
                                         const std::vector<double>& times) {
  std::vector<Eigen::Index> idx;
  for (double t : times) idx.push_back(ensemble.index_at_or_after(t));
  const auto m = sweep(ensemble, {static_cast<Eigen::Index>(idx.size())},
                       [&](std::size_t, const PathBundle& p, std::vector<Eigen::VectorXd>& obs) {
                         for (std::size_t i = 0; i < idx.size(); ++i) {
                           const double s = p.s[idx[i]];
                           obs[0][static_cast<Eigen::Index>(i)] = p.y[idx[i]] * (s - payoff.value(s));
                         }
                       });
  std::vector<Estimate> out;
  for (std::size_t i = 0; i < idx.size(); ++i) out.push_back(estimate_from(m[0], static_cast<Eigen::Index>(i)));
  return out;
}

Estimate terminal_mean(const PathEnsemble& ensemble, const std::function<double(double)>& f) {
  const auto m = sweep(ensemble, {1}, [&](std::size_t, const PathBundle& p, std::vector<Eigen::VectorXd>& obs) {
    obs[0][0] = f(p.s[p.s.size() - 1]);
  });
  return estimate_from(m[0], 0);
}

void write_delta_csv(std::ostream& os, const DefaultEstimate& d) {
  os << std::setprecision(17);
  os << "level,estimate,stderr\n";
  for (const auto& le : d.per_level) os << le.level << "," << le.estimate << "," << le.std_error << "\n";
  os << "delta_hat," << d.delta_hat << "," << d.ci_halfwidth << "\n";
  os << "verdict," << to_string(d.verdict) << ",\n";
}

}  // namespace bubbleopt
