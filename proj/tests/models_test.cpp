#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/models.hpp"
#include "bubbleopt/montecarlo.hpp"

using namespace bubbleopt;

namespace {

double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// P[|w + B_1| <= rho] for |w| = a, by Simpson on the radial density r/a (phi(r - a) - phi(r + a)).
double radial_cdf(double rho, double a) {
  const int n = 2000;
  const double h = rho / n;
  auto f = [&](double r) { return r / a * (phi_pdf(r - a) - phi_pdf(r + a)); };
  double s = f(0.0) + f(rho);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Models, ReciprocalBesselTerminalMean) {
  const ModelSpec model{ReciprocalBessel3D{1.0}};
  const auto ens = simulate_paths(model, 40000, 100, 11);
  const auto m = terminal_mean(ens, [](double s) { return s; });
  const double exact = std::erf(1.0 / std::sqrt(2.0));  // 0.6827
  EXPECT_NEAR(m.value, exact, 4.0 * m.std_error);
  // The loss of mass is the martingale defect of L = S.
  EXPECT_GT(1.0 - m.value, 0.3);
}

TEST(Models, ReciprocalBesselTerminalLawKolmogorovSmirnov) {
  const ModelSpec model{ReciprocalBessel3D{1.0}};
  const std::size_t n = 4000;
  const auto ens = simulate_paths(model, n, 20, 5);
  std::vector<double> radius(n);
  for (std::size_t i = 0; i < n; ++i) radius[i] = 1.0 / ens.path(i).s(20);
  std::sort(radius.begin(), radius.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = radial_cdf(radius[i], 1.0);
    ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }
  EXPECT_LT(ks, 1.63 / std::sqrt(double(n)));  // 1% critical value
}

TEST(Models, PathsAreReproducible) {
  const ModelSpec model{ReciprocalBessel3D{2.0}, ReciprocalBesselDeflator{1.0}};
  const auto ens = simulate_paths(model, 10, 30, 3);
  const auto a = ens.path(7);
  const auto b = ens.path(7);
  EXPECT_TRUE((a.s == b.s).all());
  EXPECT_TRUE((a.z == b.z).all());
  EXPECT_FALSE((a.s == ens.path(6).s).all());
  EXPECT_EQ(a.s(0), 2.0);
  EXPECT_EQ(a.z(0), 1.0);
  EXPECT_TRUE((a.l - a.z * a.s).abs().maxCoeff() < 1e-15);
}

TEST(Models, DeterministicJumpPath) {
  const ModelSpec model{DeterministicJump{0.5, 1.0, 4.0, 1.0, 0.25}, ReciprocalBesselDeflator{1.0}};
  const auto ens = simulate_paths(model, 4, 10, 1);
  const auto p = ens.path(2);
  for (Eigen::Index k = 0; k <= 10; ++k) {
    EXPECT_EQ(p.s(k), k < 5 ? 1.0 : 4.0);
    EXPECT_EQ(p.beta(k), k < 5 ? 1.0 : 0.25);
    // beta S = 1, so L = Z.
    EXPECT_DOUBLE_EQ(p.l(k), p.z(k));
  }
  EXPECT_EQ(ens.index_at_or_after(0.5), 5);
  EXPECT_EQ(ens.index_at_or_after(0.51), 6);
  EXPECT_DOUBLE_EQ(model.beta(0.75), 0.25);
}

TEST(Models, BesselWithReciprocalDeflatorHasUnitL) {
  const ModelSpec model{Bessel3D{1.0}, ReciprocalOfPrice{}};
  const auto ens = simulate_paths(model, 20, 50, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto p = ens.path(i);
    EXPECT_TRUE((p.l == 1.0).all());
    EXPECT_TRUE(((p.z * p.s) - 1.0).abs().maxCoeff() < 1e-14);
  }
}

TEST(Models, NoiselessLocalVolFollowsTheOde) {
  const ModelSpec model{LocalVolDiffusion{2.0, RateCurve::constant(0.05), VolFunction(PowerVol{0.0, 1.0})}};
  const auto ens = simulate_paths(model, 3, 64, 1);
  const auto p = ens.path(0);
  for (Eigen::Index k = 0; k <= 64; ++k) {
    const double t = ens.time_grid()(k);
    EXPECT_NEAR(p.s(k), 2.0 * std::exp(0.05 * t), 1e-12);
    EXPECT_NEAR(p.l(k), 2.0, 1e-12);
  }
}

TEST(Models, EulerQuadraticVolMatchesBesselMean) {
  // alpha = x^2 with r = 0 is the reciprocal Bessel law; the scheme carries a
  // small discretization bias near the absorbing side.
  const ModelSpec model{LocalVolDiffusion{1.0, RateCurve{}, VolFunction(PowerVol{1.0, 2.0})}};
  const auto ens = simulate_paths(model, 20000, 2000, 5);
  const auto m = terminal_mean(ens, [](double s) { return s; });
  EXPECT_NEAR(m.value, std::erf(1.0 / std::sqrt(2.0)), 3.0 * m.std_error + 0.01);
}

TEST(Models, CevDiscountedPriceLosesMass) {
  // alpha = x^1.5 with r = 0.03: beta S is a strict local martingale.
  const ModelSpec model{LocalVolDiffusion{1.0, RateCurve::constant(0.03), VolFunction(PowerVol{1.0, 1.5})}};
  const auto ens = simulate_paths(model, 20000, 500, 17);
  Comoments c(1);
  for (std::size_t i = 0; i < ens.size(); ++i) c.push(Eigen::Matrix<double, 1, 1>(ens.path(i).l(500)));
  EXPECT_LT(c.mean(0), 1.0 - 3.0 * c.standard_error(0));
}

TEST(Models, GbarProcessDecays) {
  // W = Y gbar(S) is a supermartingale: E[W_t] is nonincreasing.
  const ModelSpec model{ReciprocalBessel3D{1.0}};
  const auto ens = simulate_paths(model, 20000, 200, 23);
  const auto payoff = PayoffSpec::call(1.0);
  const auto w = gbar_process_means(ens, payoff, {0.0, 0.25, 0.5, 0.75, 1.0});
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w[0].value, 1.0);
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_LE(w[i].value, w[i - 1].value + 3.0 * (w[i].std_error + w[i - 1].std_error));
  EXPECT_LT(w[4].value, w[0].value);
}

TEST(Models, ValidationErrors) {
  EXPECT_THROW(ModelSpec({ReciprocalBessel3D{-1.0}}).validate(), ValidationError);
  EXPECT_THROW(ModelSpec({Bessel3D{1.0}}).validate(), ValidationError);
  EXPECT_THROW(ModelSpec({Bessel3D{2.0}, ReciprocalOfPrice{}}).validate(), ValidationError);
  EXPECT_THROW(ModelSpec({ReciprocalBessel3D{1.0}, ReciprocalBesselDeflator{2.0}}).validate(), ValidationError);
  EXPECT_THROW(ModelSpec({DeterministicJump{1.5}}).validate(), ValidationError);
  EXPECT_THROW(ModelSpec({DeterministicJump{0.5, 1.0, 3.0, 1.0, 0.25}}).validate(), ValidationError);
  EXPECT_THROW(simulate_paths(ModelSpec{ReciprocalBessel3D{}}, 10, 0, 1), ValidationError);
  EXPECT_THROW(simulate_paths(ModelSpec{ReciprocalBessel3D{}}, 10, 10, 1).path(10), ValidationError);
}
