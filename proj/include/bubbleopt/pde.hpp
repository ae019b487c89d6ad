#pragma once

#include <ostream>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bubbleopt/payoff.hpp"
#include "bubbleopt/vol.hpp"

namespace bubbleopt {

enum class Terminal { Gbar, G, Zero };
enum class GrowthClass { StrictlySublinear, Linear };

struct PdeGridSettings {
  /// Uniform cells on [0, core_upper].
  Eigen::Index core_cells = 400;
  /// Upper end of the uniform core; 0 selects 4 max(s0, K).
  double core_upper = 0.0;
  Eigen::Index time_steps = 1000;
  /// Leading Crank-Nicolson steps replaced by two implicit-Euler half-steps.
  int rannacher_steps = 1;
  /// First truncation radius as a multiple of max(s0, K).
  double r_factor = 8.0;
  int max_doublings = 24;
  /// Convergence threshold on the sup-change over [0, focus_upper].
  double tolerance = 1e-5;
  /// 0 selects core_upper.
  double focus_upper = 0.0;
  /// Keep every k-th time level (plus t = 0 and t = T); 0 keeps about 20.
  Eigen::Index save_every = 0;
};

/// u_t + 1/2 alpha^2(x) u_xx + r(t) x u_x - r(t) u = 0 on (0, inf) x [0, T),
/// u(0, t) = 0, with terminal data selected by `terminal`.
struct PdeProblem {
  VolFunction vol{PowerVol{1.0, 2.0}};
  RateCurve rate;
  Terminal terminal = Terminal::Gbar;
  PayoffSpec payoff = PayoffSpec::call(1.0);
  double horizon = 1.0;
  GrowthClass growth = GrowthClass::StrictlySublinear;
  double s0 = 1.0;
  PdeGridSettings grid;

  void validate() const;
  /// Upper end of the uniform core.
  double core_upper() const;
  double focus_upper() const;
};

struct PdeSolution {
  Eigen::ArrayXd x;
  /// Saved times, increasing, always containing 0 and T.
  Eigen::ArrayXd t;
  /// Index of each saved time in the full time grid.
  std::vector<Eigen::Index> step_index;
  /// values(slot, node).
  Eigen::ArrayXXd values;
  double truncation_radius = 0.0;
  /// (R, sup-change against the previous R); the first entry has change +inf.
  std::vector<std::pair<double, double>> convergence_history;
  GrowthClass growth = GrowthClass::StrictlySublinear;
  Terminal terminal = Terminal::Gbar;
  Eigen::Index time_steps = 0;

  /// Slot holding time t (exact up to 1e-12 relative); throws if not saved.
  Eigen::Index slot(double t) const;
  /// Quadratic Lagrange interpolation in x on a saved slot.
  double value_at(double x, Eigen::Index slot) const;
  double value_at(double x) const { return value_at(x, 0); }
};

/// Core plus geometric tail with the same relative spacing, ending at the
/// first node >= R. Grids for R and 2R share all nodes of the smaller one.
Eigen::ArrayXd build_pde_grid(double core_upper, Eigen::Index core_cells, double R);

/// One solve on a fixed truncated grid; the far boundary is gbar(R)
/// discounted for Gbar and 0 (absorption) otherwise.
PdeSolution solve_truncated(const PdeProblem& p, Terminal terminal, const Eigen::ArrayXd& x);

/// ebar by R-escalation. Requires terminal Gbar and StrictlySublinear.
PdeSolution solve_ebar(const PdeProblem& p);
/// a = x - ebar; tagged Linear.
PdeSolution american_price(const PdeSolution& sol_ebar);
/// Minimal nonnegative solution with terminal g: absorbing far boundary,
/// R increased until it stops moving. Requires terminal G and Linear.
PdeSolution solve_european(const PdeProblem& p);

struct CoupledSolution {
  PdeSolution ebar, a, e, gap;
};

/// ebar, a, e and a - e on one common grid and R schedule.
CoupledSolution solve_coupled(const PdeProblem& p);

/// a - e; checks the grids match and the terminal slice vanishes.
PdeSolution multiplicity_gap(const PdeSolution& sol_a, const PdeSolution& sol_e);

/// sup |a + ebar - x| over the common nodes (one grid must extend the other).
double parity_residual(const PdeSolution& sol_a, const PdeSolution& sol_ebar);

/// Sup over interior nodes of the Crank-Nicolson residual between saved
/// slots `slot` and `slot + 1`, which must be adjacent time levels.
double scheme_residual(const PdeProblem& p, const PdeSolution& sol, Eigen::Index slot);

/// CSV with columns t,x,ebar,a,e,gap for nodes x <= x_max.
void write_pde_csv(std::ostream& os, const CoupledSolution& sol, double x_max);

}  // namespace bubbleopt
