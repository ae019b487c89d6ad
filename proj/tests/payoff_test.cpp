#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/payoff.hpp"

using namespace bubbleopt;

namespace {

// g(x) = 0.25 x on [0, 1], 0.5 x - 0.25 on [1, 3], x - 1.75 beyond.
PayoffSpec three_piece() { return PayoffSpec::piecewise({0.0, 1.0, 3.0}, {0.25, 0.5, 1.0}); }

}  // namespace

TEST(Payoff, CallValues) {
  const auto g = PayoffSpec::call(2.0);
  EXPECT_EQ(eval_g(g, 0.0), 0.0);
  EXPECT_EQ(eval_g(g, 1.5), 0.0);
  EXPECT_EQ(eval_g(g, 2.0), 0.0);
  EXPECT_EQ(eval_g(g, 5.0), 3.0);
  EXPECT_EQ(eval_gbar(g, 1.5), 1.5);
  EXPECT_EQ(eval_gbar(g, 5.0), 2.0);
  EXPECT_EQ(g.gbar_supremum(), 2.0);
  EXPECT_EQ(threshold_k(g), 2.0);
  EXPECT_EQ(g.describe(), "call(K=2)");
}

TEST(Payoff, PiecewiseValuesAndDerivatives) {
  const auto g = three_piece();
  EXPECT_DOUBLE_EQ(eval_g(g, 0.5), 0.125);
  EXPECT_DOUBLE_EQ(eval_g(g, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(eval_g(g, 2.0), 0.75);
  EXPECT_DOUBLE_EQ(eval_g(g, 3.0), 1.25);
  EXPECT_DOUBLE_EQ(eval_g(g, 10.0), 8.25);
  EXPECT_EQ(right_derivative(g, 0.0), 0.25);
  EXPECT_EQ(right_derivative(g, 1.0), 0.5);
  EXPECT_EQ(right_derivative(g, 2.9), 0.5);
  EXPECT_EQ(right_derivative(g, 3.0), 1.0);
  EXPECT_EQ(threshold_k(g), 1.0);
  EXPECT_DOUBLE_EQ(g.gbar_supremum(), 1.75);
}

TEST(Payoff, HLimits) {
  const auto g = three_piece();
  EXPECT_EQ(eval_h(g, 0.0), 0.25);
  EXPECT_EQ(eval_h(g, INFINITY), 1.0);
  EXPECT_DOUBLE_EQ(eval_h(g, 2.0), 0.375);
  EXPECT_NEAR(eval_h(g, 1e9), 1.0, 1e-8);
}

TEST(Payoff, AffineIntervals) {
  const auto g = three_piece();
  const auto all = affine_intervals(g);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].lower, 0.0);
  EXPECT_EQ(*all[0].upper, 1.0);
  EXPECT_EQ(all[2].lower, 3.0);
  EXPECT_FALSE(all[2].bounded_above());

  const auto mid = affine_interval(g, 2.0);
  EXPECT_EQ(mid.lower, 1.0);
  EXPECT_EQ(*mid.upper, 3.0);
  EXPECT_EQ(mid.describe(), "[1, 3]");
  EXPECT_EQ(affine_interval(g, 4.0).describe(), "[3, inf]");
}

TEST(Payoff, RepeatedSlopesMergeIntoOneInterval) {
  const auto g = PayoffSpec::piecewise({0.0, 1.0, 2.0}, {0.0, 0.0, 1.0});
  const auto all = affine_intervals(g);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(*all[0].upper, 2.0);
  EXPECT_EQ(threshold_k(g), 2.0);
  EXPECT_EQ(*affine_interval(g, 1.5).upper, 2.0);
}

TEST(Payoff, RejectsInvalidSpecs) {
  EXPECT_THROW(PayoffSpec::call(0.0), ValidationError);
  EXPECT_THROW(PayoffSpec::call(-1.0), ValidationError);
  EXPECT_THROW(PayoffSpec::piecewise({0.0, 1.0}, {0.5, 0.25}), ValidationError);   // concave
  EXPECT_THROW(PayoffSpec::piecewise({0.0, 1.0}, {0.0, 2.0}), ValidationError);    // slope at infinity
  EXPECT_THROW(PayoffSpec::piecewise({0.0}, {1.0}), ValidationError);              // g(x) = x
  EXPECT_THROW(PayoffSpec::piecewise({0.0, 1.0}, {-0.5, 1.0}), ValidationError);   // negative
  EXPECT_THROW(PayoffSpec::piecewise({0.5, 1.0}, {0.0, 1.0}), ValidationError);    // does not start at 0
  EXPECT_THROW(PayoffSpec::piecewise({0.0, 2.0, 1.0}, {0.0, 0.5, 1.0}), ValidationError);
  EXPECT_THROW(PayoffSpec::piecewise({0.0, 1.0}, {0.0}), ValidationError);
  const auto g = PayoffSpec::call(1.0);
  EXPECT_THROW(eval_g(g, -1.0), ValidationError);
  EXPECT_THROW(eval_g(g, NAN), ValidationError);
  EXPECT_THROW(affine_interval(g, 0.0), ValidationError);
}

TEST(Payoff, RandomPayoffProperties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int pieces = 1 + static_cast<int>(u(rng) * 4);
    std::vector<double> b{0.0}, s;
    double slope = 0.9 * u(rng);
    s.push_back(slope);
    for (int j = 0; j < pieces; ++j) {
      b.push_back(b.back() + 0.1 + 2.0 * u(rng));
      slope = j + 1 == pieces ? 1.0 : slope + (1.0 - slope) * u(rng);
      s.push_back(slope);
    }
    const auto g = PayoffSpec::piecewise(b, s);
    double prev_gbar = 0.0;
    for (double x = 0.0; x < 12.0; x += 0.05) {
      const double gx = eval_g(g, x);
      EXPECT_GE(gx, 0.0);
      EXPECT_LE(gx, x + 1e-12);
      const double gb = eval_gbar(g, x);
      EXPECT_GE(gb, prev_gbar - 1e-12);  // nondecreasing
      EXPECT_LE(gb, g.gbar_supremum() + 1e-12);
      // Convexity of g along a chord.
      const double y = x + 0.7;
      EXPECT_LE(eval_g(g, 0.5 * (x + y)), 0.5 * (gx + eval_g(g, y)) + 1e-12);
      prev_gbar = gb;
    }
    EXPECT_NEAR(eval_gbar(g, 1e6), g.gbar_supremum(), 1e-8);
  }
}
