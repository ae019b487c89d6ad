#include "bubbleopt/pde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/tridiagonal.hpp"

namespace bubbleopt {

namespace {

using Eigen::ArrayXd;
using Eigen::Index;

/// Three-point coefficients of 1/2 alpha^2 u_xx and x u_x on a nonuniform grid.
struct Stencil {
  ArrayXd diff_lo, diff_mid, diff_hi;
  ArrayXd conv_lo, conv_mid, conv_hi;

  Stencil(const ArrayXd& x, const VolFunction& vol) {
    const Index n = x.size();
    diff_lo = diff_mid = diff_hi = conv_lo = conv_mid = conv_hi = ArrayXd::Zero(n);
    for (Index i = 1; i + 1 < n; ++i) {
      const double hm = x[i] - x[i - 1];
      const double hp = x[i + 1] - x[i];
      const double hs = hm + hp;
      const double a = vol(x[i]);
      const double d = 0.5 * a * a;
      diff_lo[i] = 2.0 * d / (hm * hs);
      diff_mid[i] = -2.0 * d / (hm * hp);
      diff_hi[i] = 2.0 * d / (hp * hs);
      conv_lo[i] = -x[i] * hp / (hm * hs);
      conv_mid[i] = x[i] * (hp - hm) / (hm * hp);
      conv_hi[i] = x[i] * hm / (hp * hs);
    }
  }

  /// L coefficients at rate r, interior rows only.
  void at_rate(double r, ArrayXd& lo, ArrayXd& mid, ArrayXd& hi) const {
    lo = diff_lo + r * conv_lo;
    mid = diff_mid + r * conv_mid;
    hi = diff_hi + r * conv_hi;
    const Index n = mid.size();
    mid.segment(1, n - 2) -= r;
  }
};

/// (L u) at interior nodes; zero at the two boundary nodes.
ArrayXd apply(const ArrayXd& lo, const ArrayXd& mid, const ArrayXd& hi, const ArrayXd& u) {
  const Index n = u.size();
  ArrayXd out = ArrayXd::Zero(n);
  out.segment(1, n - 2) = lo.segment(1, n - 2) * u.segment(0, n - 2) + mid.segment(1, n - 2) * u.segment(1, n - 2) +
                          hi.segment(1, n - 2) * u.segment(2, n - 2);
  return out;
}

double terminal_value(const PayoffSpec& payoff, Terminal terminal, double x) {
  switch (terminal) {
    case Terminal::Gbar:
      return eval_gbar(payoff, x);
    case Terminal::G:
      return eval_g(payoff, x);
    case Terminal::Zero:
      return 0.0;
  }
  return 0.0;
}

/// Dirichlet value at the truncation radius: the discounted bounded limit of
/// gbar, or absorption for the call-type leg.
double far_boundary(const PdeProblem& p, Terminal terminal, double R, double t) {
  if (terminal != Terminal::Gbar) return 0.0;
  return eval_gbar(p.payoff, R) * std::exp(-p.rate.integral(t, p.horizon));
}

std::vector<Index> saved_steps(Index n_steps, Index save_every) {
  const Index stride = save_every > 0 ? save_every : std::max<Index>(1, n_steps / 20);
  std::vector<Index> out;
  for (Index k = 0; k < n_steps; k += stride) out.push_back(k);
  out.push_back(n_steps);
  return out;
}

double base_scale(const PdeProblem& p) { return std::max(p.s0, threshold_k(p.payoff)); }

void check_max_principle(const PdeProblem& p, const PdeSolution& s) {
  const double lo = s.values.minCoeff();
  const double scale = 1.0 + s.values.abs().maxCoeff();
  if (lo < -1e-9 * scale) {
    std::ostringstream os;
    os << "discrete maximum principle violated: minimum " << lo;
    throw NumericalError(os.str());
  }
  if (s.terminal == Terminal::Gbar) {
    const double cap = p.payoff.gbar_supremum();
    const double hi = s.values.maxCoeff();
    if (hi > cap + 1e-9 * scale) {
      std::ostringstream os;
      os << "discrete maximum principle violated: ebar reaches " << hi << " above sup gbar = " << cap;
      throw NumericalError(os.str());
    }
  }
}

std::vector<PdeSolution> escalate(const PdeProblem& p, const std::vector<Terminal>& terminals) {
  p.validate();
  const double core = p.core_upper();
  const double focus = p.focus_upper();
  const double R0 = std::max(p.grid.r_factor * base_scale(p), 2.0 * core);
  std::vector<std::pair<double, double>> history;
  std::vector<PdeSolution> prev;
  for (int k = 0; k <= p.grid.max_doublings; ++k) {
    const ArrayXd x = build_pde_grid(core, p.grid.core_cells, R0 * std::ldexp(1.0, k));
    std::vector<PdeSolution> cur;
    for (Terminal term : terminals) cur.push_back(solve_truncated(p, term, x));

    double change = std::numeric_limits<double>::infinity();
    if (!prev.empty()) {
      change = 0.0;
      const Index n_prev = prev.front().x.size();
      Index n_focus = 0;
      while (n_focus < n_prev && prev.front().x[n_focus] <= focus) ++n_focus;
      for (std::size_t j = 0; j < cur.size(); ++j)
        change = std::max(change,
                          (cur[j].values.leftCols(n_focus) - prev[j].values.leftCols(n_focus)).abs().maxCoeff());
    }
    history.emplace_back(x[x.size() - 1], change);
    if (change < p.grid.tolerance) {
      for (auto& s : cur) {
        s.convergence_history = history;
        check_max_principle(p, s);
      }
      return cur;
    }
    prev = std::move(cur);
  }
  std::ostringstream os;
  os << "truncation radius did not converge after " << p.grid.max_doublings << " doublings; history (R, change):";
  for (const auto& [R, c] : history) os << " (" << R << ", " << c << ")";
  throw NumericalError(os.str());
}

void require_same_grid(const PdeSolution& a, const PdeSolution& b) {
  if (a.x.size() != b.x.size() || (a.x != b.x).any() || a.t.size() != b.t.size() || (a.t != b.t).any())
    throw ValidationError("solutions live on different grids");
}

}  // namespace

// ---------------------------------------------------------------------------

void PdeProblem::validate() const {
  if (!(horizon > 0.0)) throw ValidationError("pde horizon must be positive");
  if (!(s0 > 0.0)) throw ValidationError("pde s0 must be positive");
  if (grid.core_cells < 4) throw ValidationError("pde core_cells must be at least 4");
  if (grid.time_steps < 1) throw ValidationError("pde time_steps must be at least 1");
  if (grid.rannacher_steps < 0 || grid.rannacher_steps > grid.time_steps)
    throw ValidationError("pde rannacher_steps must lie in [0, time_steps]");
  if (!(grid.r_factor > 0.0)) throw ValidationError("pde r_factor must be positive");
  if (grid.max_doublings < 0) throw ValidationError("pde max_doublings must be nonnegative");
  if (!(grid.tolerance > 0.0)) throw ValidationError("pde tolerance must be positive");
  if (grid.core_upper < 0.0 || grid.focus_upper < 0.0) throw ValidationError("pde core_upper and focus_upper must be nonnegative");
  if (vol(0.0) != 0.0) throw ValidationError("vol must vanish at 0");
  if (!vol.identically_zero()) {
    for (double x : {1e-3, 0.5, 1.0, 10.0, 1e3}) {
      const double a = vol(x);
      if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("vol must be positive on (0, inf)");
    }
  }
  for (double r : rate.rates())
    if (r < 0.0) throw ValidationError("rate must be nonnegative");
  if (terminal == Terminal::Gbar && growth != GrowthClass::StrictlySublinear)
    throw ValidationError("terminal gbar is strictly sublinear; growth class Linear is inconsistent");
  if (terminal == Terminal::G && growth != GrowthClass::Linear)
    throw ValidationError("terminal g grows linearly; growth class StrictlySublinear is inconsistent");
}

double PdeProblem::core_upper() const { return grid.core_upper > 0.0 ? grid.core_upper : 4.0 * base_scale(*this); }

double PdeProblem::focus_upper() const { return grid.focus_upper > 0.0 ? grid.focus_upper : core_upper(); }

Index PdeSolution::slot(double time) const {
  for (Index i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - time) <= 1e-12 * std::max(1.0, std::abs(time))) return i;
  throw ValidationError("time " + std::to_string(time) + " is not a saved slice");
}

double PdeSolution::value_at(double xq, Index s) const {
  const Index n = x.size();
  if (s < 0 || s >= values.rows()) throw ValidationError("slot out of range");
  if (!(xq >= x[0] && xq <= x[n - 1])) throw ValidationError("x = " + std::to_string(xq) + " lies outside the grid");
  const auto it = std::upper_bound(x.data(), x.data() + n, xq);
  const Index j = std::max<Index>(0, static_cast<Index>(it - x.data()) - 1);
  if (x[j] == xq) return values(s, j);
  const Index i0 = std::clamp<Index>(j - 1 + (xq - x[j] > x[j + 1] - xq ? 1 : 0), 0, n - 3);
  double out = 0.0;
  for (Index a = i0; a < i0 + 3; ++a) {
    double w = 1.0;
    for (Index b = i0; b < i0 + 3; ++b)
      if (b != a) w *= (xq - x[b]) / (x[a] - x[b]);
    out += w * values(s, a);
  }
  return out;
}

ArrayXd build_pde_grid(double core_upper, Index core_cells, double R) {
  if (!(core_upper > 0.0) || core_cells < 2) throw ValidationError("grid needs a positive core");
  const double h = core_upper / static_cast<double>(core_cells);
  const double growth = 1.0 + h / core_upper;
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(core_cells) + 1);
  for (Index j = 0; j <= core_cells; ++j) xs.push_back(core_upper * static_cast<double>(j) / static_cast<double>(core_cells));
  for (int m = 1; xs.back() < R; ++m) xs.push_back(core_upper * std::pow(growth, m));
  return Eigen::Map<ArrayXd>(xs.data(), static_cast<Index>(xs.size()));
}

PdeSolution solve_truncated(const PdeProblem& p, Terminal terminal, const ArrayXd& x) {
  const Index n = x.size();
  if (n < 3) throw ValidationError("grid needs at least 3 nodes");
  const Index N = p.grid.time_steps;
  const double T = p.horizon;
  const double dt = T / static_cast<double>(N);
  const double R = x[n - 1];
  const Stencil stencil(x, p.vol);

  PdeSolution sol;
  sol.x = x;
  sol.terminal = terminal;
  sol.growth = terminal == Terminal::Gbar ? GrowthClass::StrictlySublinear : GrowthClass::Linear;
  sol.truncation_radius = R;
  sol.time_steps = N;
  sol.step_index = saved_steps(N, p.grid.save_every);
  const Index n_saved = static_cast<Index>(sol.step_index.size());
  sol.t.resize(n_saved);
  for (Index i = 0; i < n_saved; ++i) sol.t[i] = T * static_cast<double>(sol.step_index[i]) / static_cast<double>(N);
  sol.values.resize(n_saved, n);

  ArrayXd u = x.unaryExpr([&](double xi) { return terminal_value(p.payoff, terminal, xi); });
  u[0] = 0.0;
  Index next_slot = n_saved - 1;
  sol.values.row(next_slot--) = u.transpose();

  ArrayXd lo, mid, hi, rhs, lower, diag, upper, work, next;
  auto theta_step = [&](double theta, double step, double t_new) {
    const ArrayXd Lu = apply(lo, mid, hi, u);
    rhs = u + (1.0 - theta) * step * Lu;
    lower = -theta * step * lo;
    diag = 1.0 - theta * step * mid;
    upper = -theta * step * hi;
    lower[0] = upper[0] = 0.0;
    diag[0] = 1.0;
    rhs[0] = 0.0;
    lower[n - 1] = upper[n - 1] = 0.0;
    diag[n - 1] = 1.0;
    rhs[n - 1] = far_boundary(p, terminal, R, t_new);
    solve_tridiagonal(lower, diag, upper, rhs, next, work);
    u.swap(next);
  };

  for (Index k = N - 1; k >= 0; --k) {
    const double t_lo = T * static_cast<double>(k) / static_cast<double>(N);
    const double t_hi = T * static_cast<double>(k + 1) / static_cast<double>(N);
    stencil.at_rate(p.rate.rate(0.5 * (t_lo + t_hi)), lo, mid, hi);
    if (N - 1 - k < p.grid.rannacher_steps) {
      theta_step(1.0, 0.5 * dt, 0.5 * (t_lo + t_hi));
      theta_step(1.0, 0.5 * dt, t_lo);
    } else {
      theta_step(0.5, dt, t_lo);
    }
    if (!u.allFinite()) throw NumericalError("non-finite values in the PDE march");
    if (next_slot >= 0 && sol.step_index[static_cast<std::size_t>(next_slot)] == k) sol.values.row(next_slot--) = u.transpose();
  }
  return sol;
}

PdeSolution solve_ebar(const PdeProblem& p) {
  if (p.terminal != Terminal::Gbar) throw ValidationError("solve_ebar needs terminal gbar");
  return escalate(p, {Terminal::Gbar}).front();
}

PdeSolution american_price(const PdeSolution& sol_ebar) {
  if (sol_ebar.terminal != Terminal::Gbar) throw ValidationError("american_price needs an ebar solution");
  PdeSolution a = sol_ebar;
  a.values = (-sol_ebar.values).rowwise() + sol_ebar.x.transpose();
  a.growth = GrowthClass::Linear;
  a.terminal = Terminal::G;
  return a;
}

PdeSolution solve_european(const PdeProblem& p) {
  if (p.terminal != Terminal::G) throw ValidationError("solve_european needs terminal g");
  return escalate(p, {Terminal::G}).front();
}

CoupledSolution solve_coupled(const PdeProblem& p) {
  PdeProblem q = p;
  q.terminal = Terminal::Gbar;
  q.growth = GrowthClass::StrictlySublinear;
  auto sols = escalate(q, {Terminal::Gbar, Terminal::G});
  CoupledSolution out;
  out.ebar = std::move(sols[0]);
  out.e = std::move(sols[1]);
  out.a = american_price(out.ebar);
  out.gap = multiplicity_gap(out.a, out.e);
  return out;
}

PdeSolution multiplicity_gap(const PdeSolution& sol_a, const PdeSolution& sol_e) {
  require_same_grid(sol_a, sol_e);
  PdeSolution gap = sol_e;
  gap.values = sol_a.values - sol_e.values;
  gap.terminal = Terminal::Zero;
  const Index last = gap.values.rows() - 1;
  const double scale = 1.0 + sol_a.x.maxCoeff();
  if (gap.values.row(last).abs().maxCoeff() > 1e-12 * scale)
    throw NumericalError("a - e does not vanish at the horizon");
  return gap;
}

double parity_residual(const PdeSolution& sol_a, const PdeSolution& sol_ebar) {
  const Index n = std::min(sol_a.x.size(), sol_ebar.x.size());
  if ((sol_a.x.head(n) != sol_ebar.x.head(n)).any() || sol_a.t.size() != sol_ebar.t.size() || (sol_a.t != sol_ebar.t).any())
    throw ValidationError("parity needs nested grids with the same saved times");
  const ArrayXd x = sol_a.x.head(n);
  return ((sol_a.values.leftCols(n) + sol_ebar.values.leftCols(n)).rowwise() - x.transpose()).abs().maxCoeff();
}

double scheme_residual(const PdeProblem& p, const PdeSolution& sol, Index slot) {
  if (slot < 0 || slot + 1 >= static_cast<Index>(sol.step_index.size()))
    throw ValidationError("slot out of range for the residual");
  const Index k = sol.step_index[static_cast<std::size_t>(slot)];
  if (sol.step_index[static_cast<std::size_t>(slot + 1)] != k + 1)
    throw ValidationError("residual needs two adjacent saved time levels");
  if (sol.time_steps - 1 - k < p.grid.rannacher_steps)
    throw ValidationError("residual is defined for Crank-Nicolson steps, not the implicit start-up");
  const Index n = sol.x.size();
  const double dt = p.horizon / static_cast<double>(sol.time_steps);
  const Stencil stencil(sol.x, p.vol);
  ArrayXd lo, mid, hi;
  stencil.at_rate(p.rate.rate(0.5 * (sol.t[slot] + sol.t[slot + 1])), lo, mid, hi);
  const ArrayXd u0 = sol.values.row(slot).transpose();
  const ArrayXd u1 = sol.values.row(slot + 1).transpose();
  const ArrayXd r = (u0 - 0.5 * dt * apply(lo, mid, hi, u0)) - (u1 + 0.5 * dt * apply(lo, mid, hi, u1));
  return r.segment(1, n - 2).abs().maxCoeff();
}

void write_pde_csv(std::ostream& os, const CoupledSolution& sol, double x_max) {
  os << std::setprecision(17);
  os << "t,x,ebar,a,e,gap\n";
  for (Index s = 0; s < sol.ebar.t.size(); ++s) {
    for (Index j = 0; j < sol.ebar.x.size() && sol.ebar.x[j] <= x_max; ++j) {
      os << sol.ebar.t[s] << "," << sol.ebar.x[j] << "," << sol.ebar.values(s, j) << "," << sol.a.values(s, j) << ","
         << sol.e.values(s, j) << "," << sol.gap.values(s, j) << "\n";
    }
  }
}

}  // namespace bubbleopt
