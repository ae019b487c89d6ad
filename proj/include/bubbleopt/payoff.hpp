#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace bubbleopt {

/// Closed interval [lower, upper] on which a payoff is affine. An empty
/// `upper` means the interval is unbounded above.
struct AffineInterval {
  double lower = 0.0;
  std::optional<double> upper;

  bool bounded_above() const { return upper.has_value(); }
  bool contains(double x) const { return x >= lower && (!upper || x <= *upper); }
  std::string describe() const;
};

/// Convex piecewise-affine payoff g with g(0) = 0 and terminal slope 1.
///
/// Segment j covers [breakpoints[j], breakpoints[j+1]) with slope slopes[j];
/// the last segment extends to infinity. Construction validates convexity,
/// nonnegativity and g(x) < x somewhere, and throws ValidationError otherwise.
class PayoffSpec {
 public:
  static PayoffSpec call(double strike);
  static PayoffSpec piecewise(std::vector<double> breakpoints, std::vector<double> slopes);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& slopes() const { return slopes_; }

  /// Index of the segment whose half-open range contains x (x >= 0).
  std::size_t segment(double x) const;
  /// g evaluated without domain checks; x must be finite and nonnegative.
  double value(double x) const;

  /// sup of x - g(x), the value of the bounded put-like leg at infinity.
  double gbar_supremum() const { return -intercepts_.back(); }

  std::string describe() const;

 private:
  PayoffSpec(std::vector<double> breakpoints, std::vector<double> slopes);

  std::vector<double> breakpoints_;
  std::vector<double> slopes_;
  std::vector<double> intercepts_;  // g(x) = slopes_[j] * x + intercepts_[j] on segment j
};

double eval_g(const PayoffSpec& p, double x);
/// x - g(x): nonnegative, nondecreasing, concave.
double eval_gbar(const PayoffSpec& p, double x);
/// Right derivative g'(x).
double right_derivative(const PayoffSpec& p, double x);
/// sup{x : g(x) = g'(0) x}; the strike for a call.
double threshold_k(const PayoffSpec& p);
/// [l(x), r(x)]: the maximal interval around x on which g' is constant. x > 0.
AffineInterval affine_interval(const PayoffSpec& p, double x);
/// All maximal affine intervals I_i, in increasing order.
std::vector<AffineInterval> affine_intervals(const PayoffSpec& p);
/// h(x) = g(x)/x with h(0) = g'(0) and h(+inf) = 1.
double eval_h(const PayoffSpec& p, double x);

}  // namespace bubbleopt
