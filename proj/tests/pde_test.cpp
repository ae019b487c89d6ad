#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bubbleopt/closed_form.hpp"
#include "bubbleopt/errors.hpp"
#include "bubbleopt/pde.hpp"

using namespace bubbleopt;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double black_scholes_call(double x, double K, double r, double sigma, double tau) {
  const double d1 = (std::log(x / K) + (r + 0.5 * sigma * sigma) * tau) / (sigma * std::sqrt(tau));
  return x * phi(d1) - K * std::exp(-r * tau) * phi(d1 - sigma * std::sqrt(tau));
}

PdeProblem bessel_problem(Eigen::Index cells, Eigen::Index steps) {
  PdeProblem p;
  p.grid.core_cells = cells;
  p.grid.time_steps = steps;
  p.grid.focus_upper = 64.0;
  return p;
}

PdeProblem lognormal_problem(double sigma, double r, Terminal terminal) {
  PdeProblem p;
  p.vol = VolFunction(PowerVol{sigma, 1.0});
  p.rate = RateCurve::constant(r);
  p.terminal = terminal;
  p.growth = terminal == Terminal::G ? GrowthClass::Linear : GrowthClass::StrictlySublinear;
  p.grid.core_cells = 200;
  p.grid.time_steps = 200;
  return p;
}

}  // namespace

TEST(PdeGrid, NestedAcrossRadii) {
  const Eigen::ArrayXd a = build_pde_grid(4.0, 100, 100.0);
  const Eigen::ArrayXd b = build_pde_grid(4.0, 100, 200.0);
  EXPECT_EQ(a(0), 0.0);
  EXPECT_DOUBLE_EQ(a(100), 4.0);
  EXPECT_GE(a(a.size() - 1), 100.0);
  ASSERT_GT(b.size(), a.size());
  EXPECT_TRUE((b.head(a.size()) == a).all());
  // Uniform core, then geometric spacing with ratio 1 + h / core.
  EXPECT_NEAR(a(50) - a(49), 0.04, 1e-12);
  EXPECT_NEAR((a(102) - a(101)) / (a(101) - a(100)), 1.01, 1e-9);
}

TEST(Pde, BesselGapMatchesClosedForm) {
  const auto c = solve_coupled(bessel_problem(400, 1000));
  for (double x : {0.5, 1.0, 2.0}) {
    const double exact = martingale_defect(x, 0.0, 1.0);
    EXPECT_NEAR(c.gap.value_at(x, 0), exact, 0.01 * exact) << x;
  }
  const double far = c.a.value_at(50.0, 0) - 49.0;
  EXPECT_NEAR(far, american_call_far_field_gap(1.0, 0.0, 1.0), 0.02 * 0.3173105);
  EXPECT_NEAR(c.e.value_at(50.0, 0), european_call_limit(1.0, 0.0, 1.0), 0.02 * 0.1151951);

  // a + ebar = x holds by assembly.
  EXPECT_LT(parity_residual(c.a, c.ebar), 1e-10);
  // The gap vanishes at the horizon and is nonnegative.
  EXPECT_EQ(c.gap.values.row(c.gap.values.rows() - 1).abs().maxCoeff(), 0.0);
  EXPECT_GE(c.gap.values.minCoeff(), -1e-9);
  // History changes shrink once the smaller grid of each pair clears the
  // focus region by a factor of two.
  const auto& h = c.ebar.convergence_history;
  ASSERT_GE(h.size(), 3u);
  EXPECT_LT(h.back().second, 1e-5);
  for (std::size_t k = 2; k < h.size(); ++k)
    if (h[k - 2].first >= 2.0 * 64.0) {
      EXPECT_LE(h[k].second, h[k - 1].second) << k;
    }
}

TEST(Pde, TruncatedEuropeanIncreasesWithRadius) {
  PdeProblem p = bessel_problem(100, 200);
  p.terminal = Terminal::G;
  p.growth = GrowthClass::Linear;
  PdeSolution prev;
  for (double R : {16.0, 32.0, 64.0, 128.0}) {
    const auto s = solve_truncated(p, Terminal::G, build_pde_grid(4.0, 100, R));
    if (prev.x.size() > 0) {
      const Eigen::Index n = prev.x.size();
      EXPECT_TRUE((s.values.leftCols(n) >= prev.values - 1e-12).all()) << R;
    }
    prev = s;
  }
}

TEST(Pde, SchemeResidualOnAdjacentSlots) {
  PdeProblem p = bessel_problem(100, 100);
  p.grid.save_every = 1;
  const auto s = solve_truncated(p, Terminal::Gbar, build_pde_grid(4.0, 100, 64.0));
  ASSERT_EQ(s.t.size(), 101);
  EXPECT_LT(scheme_residual(p, s, 10), 1e-9);
  EXPECT_LT(scheme_residual(p, s, 98), 1e-9);
  EXPECT_THROW(scheme_residual(p, s, 99), ValidationError);  // implicit start-up step
  EXPECT_THROW(scheme_residual(p, s, 100), ValidationError);
}

TEST(Pde, SecondOrderRefinement) {
  // Uniform grid on [0, 16] with the kink and x = 1 on nodes at every level;
  // h and dt are halved together.
  double u[3];
  int i = 0;
  for (Eigen::Index cells : {160, 320, 640}) {
    PdeProblem p = bessel_problem(cells, cells);
    u[i++] = solve_truncated(p, Terminal::Gbar, build_pde_grid(16.0, cells, 16.0)).value_at(1.0, 0);
  }
  const double ratio = (u[0] - u[1]) / (u[1] - u[2]);
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
}

TEST(Pde, LognormalEuropeanMatchesBlackScholes) {
  const auto p = lognormal_problem(0.3, 0.05, Terminal::G);
  const auto e = solve_european(p);
  for (double x : {0.8, 1.0, 1.25}) EXPECT_NEAR(e.value_at(x, 0), black_scholes_call(x, 1.0, 0.05, 0.3, 1.0), 2e-3) << x;
  const Eigen::Index mid = e.slot(0.5);
  EXPECT_NEAR(e.value_at(1.0, mid), black_scholes_call(1.0, 1.0, 0.05, 0.3, 0.5), 2e-3);
}

TEST(Pde, TrueMartingaleHasNoGap) {
  // With alpha linear and r = 0, x - E[gbar] and E[g] coincide: a = e.
  const auto c = solve_coupled(lognormal_problem(0.3, 0.0, Terminal::Gbar));
  for (double x : {0.5, 1.0, 2.0}) EXPECT_NEAR(c.gap.value_at(x, 0), 0.0, 2e-3) << x;
  EXPECT_NEAR(c.e.value_at(1.0, 0), black_scholes_call(1.0, 1.0, 0.0, 0.3, 1.0), 2e-3);
}

TEST(Pde, ProblemValidation) {
  PdeProblem p;
  p.growth = GrowthClass::Linear;
  EXPECT_THROW(p.validate(), ValidationError);  // gbar is strictly sublinear
  EXPECT_THROW(solve_ebar(p), ValidationError);
  PdeProblem q;
  q.terminal = Terminal::G;
  EXPECT_THROW(q.validate(), ValidationError);
  EXPECT_THROW(solve_european(PdeProblem{}), ValidationError);
  PdeProblem r;
  r.vol = VolFunction(TableVol{{0.0, 1.0}, {0.0, 1.0}});
  EXPECT_NO_THROW(r.validate());
  EXPECT_THROW(RateCurve::constant(-0.01), ValidationError);
  EXPECT_THROW(VolFunction(PowerVol{1.0, 0.0}), ValidationError);  // alpha(0) = 1
}

TEST(Pde, SlotsAndInterpolation) {
  PdeProblem p = bessel_problem(100, 100);
  const auto s = solve_truncated(p, Terminal::Gbar, build_pde_grid(4.0, 100, 64.0));
  EXPECT_EQ(s.t(0), 0.0);
  EXPECT_EQ(s.t(s.t.size() - 1), 1.0);
  EXPECT_EQ(s.slot(0.0), 0);
  EXPECT_THROW(s.slot(0.123), ValidationError);
  // Terminal slice is gbar itself; interpolation is exact on the affine pieces.
  const Eigen::Index last = s.slot(1.0);
  EXPECT_NEAR(s.value_at(0.33, last), 0.33, 1e-12);
  EXPECT_NEAR(s.value_at(2.5, last), 1.0, 1e-12);
  EXPECT_THROW(s.value_at(1e9, 0), ValidationError);
}

TEST(Pde, CsvColumns) {
  const auto c = solve_coupled(bessel_problem(40, 40));
  std::ostringstream os;
  write_pde_csv(os, c, 2.0);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "t,x,ebar,a,e,gap");
}
