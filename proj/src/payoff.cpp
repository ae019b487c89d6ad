#include "bubbleopt/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bubbleopt/errors.hpp"

namespace bubbleopt {

namespace {

void require_domain(double x) {
  if (!(x >= 0.0) || std::isnan(x)) throw ValidationError("payoff argument must be nonnegative, got " + std::to_string(x));
}

}  // namespace

std::string AffineInterval::describe() const {
  std::ostringstream os;
  os << "[" << lower << ", ";
  if (upper) {
    os << *upper;
  } else {
    os << "inf";
  }
  os << "]";
  return os.str();
}

PayoffSpec::PayoffSpec(std::vector<double> breakpoints, std::vector<double> slopes)
    : breakpoints_(std::move(breakpoints)), slopes_(std::move(slopes)) {
  if (breakpoints_.empty() || breakpoints_.front() != 0.0)
    throw ValidationError("payoff breakpoints must start at 0");
  if (slopes_.size() != breakpoints_.size())
    throw ValidationError("payoff needs exactly one slope per breakpoint (segment [b_j, b_{j+1}))");
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
    if (!std::isfinite(breakpoints_[j]) || !std::isfinite(slopes_[j]))
      throw ValidationError("payoff breakpoints and slopes must be finite");
    if (j > 0 && !(breakpoints_[j] > breakpoints_[j - 1]))
      throw ValidationError("payoff breakpoints must be strictly increasing");
    if (j > 0 && slopes_[j] < slopes_[j - 1])
      throw ValidationError("payoff slopes must be nondecreasing (convexity)");
  }
  if (slopes_.front() < 0.0) throw ValidationError("payoff slope at 0 must be nonnegative (g >= 0)");
  if (slopes_.back() != 1.0) throw ValidationError("payoff terminal slope must be exactly 1");
  if (!(slopes_.front() < 1.0))
    throw ValidationError("payoff must satisfy g(x) < x for some x > 0 (g(x) = x is excluded)");

  intercepts_.resize(slopes_.size());
  intercepts_[0] = 0.0;
  for (std::size_t j = 1; j < slopes_.size(); ++j) {
    const double at_break = slopes_[j - 1] * breakpoints_[j] + intercepts_[j - 1];
    intercepts_[j] = at_break - slopes_[j] * breakpoints_[j];
  }
}

PayoffSpec PayoffSpec::call(double strike) {
  if (!(strike > 0.0) || !std::isfinite(strike)) throw ValidationError("call strike must be positive");
  return PayoffSpec({0.0, strike}, {0.0, 1.0});
}

PayoffSpec PayoffSpec::piecewise(std::vector<double> breakpoints, std::vector<double> slopes) {
  return PayoffSpec(std::move(breakpoints), std::move(slopes));
}

std::size_t PayoffSpec::segment(double x) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
}

double PayoffSpec::value(double x) const {
  const std::size_t j = segment(x);
  // Written relative to the segment's left end so a call evaluates as x - K exactly.
  const double at_left = slopes_[j] * breakpoints_[j] + intercepts_[j];
  return at_left + slopes_[j] * (x - breakpoints_[j]);
}

std::string PayoffSpec::describe() const {
  std::ostringstream os;
  if (breakpoints_.size() == 2 && slopes_[0] == 0.0) {
    os << "call(K=" << breakpoints_[1] << ")";
    return os.str();
  }
  os << "piecewise(breakpoints=[";
  for (std::size_t j = 0; j < breakpoints_.size(); ++j) os << (j ? ", " : "") << breakpoints_[j];
  os << "], slopes=[";
  for (std::size_t j = 0; j < slopes_.size(); ++j) os << (j ? ", " : "") << slopes_[j];
  os << "])";
  return os.str();
}

double eval_g(const PayoffSpec& p, double x) {
  require_domain(x);
  if (std::isinf(x)) throw ValidationError("eval_g is defined on finite arguments");
  return p.value(x);
}

double eval_gbar(const PayoffSpec& p, double x) { return x - eval_g(p, x); }

double right_derivative(const PayoffSpec& p, double x) {
  require_domain(x);
  return p.slopes()[p.segment(x)];
}

double threshold_k(const PayoffSpec& p) {
  const auto& s = p.slopes();
  for (std::size_t j = 1; j < s.size(); ++j)
    if (s[j] != s[0]) return p.breakpoints()[j];
  // Unreachable for a validated payoff: slopes[0] < 1 = slopes.back().
  throw NumericalError("payoff has no kink");
}

AffineInterval affine_interval(const PayoffSpec& p, double x) {
  if (!(x > 0.0)) throw ValidationError("affine_interval is defined for x > 0");
  if (std::isinf(x)) throw ValidationError("affine_interval is defined for finite x");
  const auto& s = p.slopes();
  const auto& b = p.breakpoints();
  std::size_t lo = p.segment(x);
  std::size_t hi = lo;
  while (lo > 0 && s[lo - 1] == s[lo]) --lo;
  while (hi + 1 < s.size() && s[hi + 1] == s[hi]) ++hi;
  AffineInterval out{b[lo], std::nullopt};
  if (hi + 1 < s.size()) out.upper = b[hi + 1];
  return out;
}

std::vector<AffineInterval> affine_intervals(const PayoffSpec& p) {
  std::vector<AffineInterval> out;
  const auto& s = p.slopes();
  const auto& b = p.breakpoints();
  std::size_t j = 0;
  while (j < s.size()) {
    std::size_t end = j;
    while (end + 1 < s.size() && s[end + 1] == s[j]) ++end;
    AffineInterval interval{b[j], std::nullopt};
    if (end + 1 < s.size()) interval.upper = b[end + 1];
    out.push_back(interval);
    j = end + 1;
  }
  return out;
}

double eval_h(const PayoffSpec& p, double x) {
  require_domain(x);
  if (std::isinf(x)) return 1.0;
  if (x == 0.0) return p.slopes().front();
  return p.value(x) / x;
}

}  // namespace bubbleopt
