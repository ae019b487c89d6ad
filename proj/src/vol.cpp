#include "bubbleopt/vol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bubbleopt/errors.hpp"

namespace bubbleopt {

VolFunction::VolFunction(PowerVol p) : spec_(p) {
  if (!std::isfinite(p.coefficient) || p.coefficient < 0.0)
    throw ValidationError("power vol coefficient must be finite and nonnegative");
  if (!std::isfinite(p.exponent) || !(p.exponent > 0.0))
    throw ValidationError("power vol exponent must be positive so that alpha(0) = 0");
}

VolFunction::VolFunction(TableVol t) : spec_(std::move(t)) {
  const auto& tv = std::get<TableVol>(spec_);
  if (tv.xs.size() < 2 || tv.xs.size() != tv.alphas.size())
    throw ValidationError("table vol needs at least two (x, alpha) pairs of equal length");
  if (tv.xs.front() != 0.0 || tv.alphas.front() != 0.0)
    throw ValidationError("table vol must start at (0, 0) so that alpha(0) = 0");
  for (std::size_t i = 1; i < tv.xs.size(); ++i) {
    if (!(tv.xs[i] > tv.xs[i - 1])) throw ValidationError("table vol xs must be strictly increasing");
    if (!(tv.alphas[i] > 0.0) || !std::isfinite(tv.alphas[i]))
      throw ValidationError("table vol alphas must be positive for x > 0");
  }
}

double VolFunction::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (const auto* p = std::get_if<PowerVol>(&spec_)) return p->coefficient * std::pow(x, p->exponent);
  const auto& t = std::get<TableVol>(spec_);
  const auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
  std::size_t j = static_cast<std::size_t>(it - t.xs.begin());
  j = std::clamp<std::size_t>(j, 1, t.xs.size() - 1);
  const double w = (x - t.xs[j - 1]) / (t.xs[j] - t.xs[j - 1]);
  const double a = t.alphas[j - 1] + w * (t.alphas[j] - t.alphas[j - 1]);
  // A decreasing last segment would turn negative when extended; hold it flat instead.
  return x > t.xs.back() && a < t.alphas.back() ? t.alphas.back() : a;
}

bool VolFunction::identically_zero() const {
  const auto* p = std::get_if<PowerVol>(&spec_);
  return p && p->coefficient == 0.0;
}

std::string VolFunction::describe() const {
  std::ostringstream os;
  if (const auto* p = std::get_if<PowerVol>(&spec_)) {
    os << "power(c=" << p->coefficient << ", p=" << p->exponent << ")";
  } else {
    os << "table(" << std::get<TableVol>(spec_).xs.size() << " nodes)";
  }
  return os.str();
}

RateCurve RateCurve::constant(double r) { return piecewise({}, {r}); }

RateCurve RateCurve::piecewise(std::vector<double> times, std::vector<double> rates) {
  if (rates.size() != times.size() + 1)
    throw ValidationError("rate curve needs one more rate than switch times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > (i ? times[i - 1] : 0.0))) throw ValidationError("rate switch times must be positive and increasing");
  }
  for (double r : rates)
    if (!std::isfinite(r) || r < 0.0) throw ValidationError("rates must be finite and nonnegative");
  RateCurve c;
  c.times_ = std::move(times);
  c.rates_ = std::move(rates);
  return c;
}

double RateCurve::rate(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return rates_[static_cast<std::size_t>(it - times_.begin())];
}

double RateCurve::integral(double t0, double t1) const {
  if (t1 < t0) return -integral(t1, t0);
  double total = 0.0;
  double left = t0;
  for (std::size_t j = 0; j <= times_.size(); ++j) {
    const double seg_end = j < times_.size() ? times_[j] : t1;
    if (seg_end <= left) continue;
    const double right = std::min(seg_end, t1);
    total += rates_[j] * (right - left);
    left = right;
    if (left >= t1) break;
  }
  return total;
}

double RateCurve::discount(double t) const { return std::exp(-integral(0.0, t)); }

bool RateCurve::is_zero() const {
  return std::all_of(rates_.begin(), rates_.end(), [](double r) { return r == 0.0; });
}

}  // namespace bubbleopt
