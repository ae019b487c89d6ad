#pragma once

#include <string>
#include <variant>
#include <vector>

namespace bubbleopt {

/// alpha(x) = coefficient * x^exponent.
struct PowerVol {
  double coefficient = 1.0;
  double exponent = 1.0;
};

/// Linear interpolation through (xs, alphas); xs[0] = 0 with alphas[0] = 0.
/// Beyond the last node the last segment is extended linearly.
struct TableVol {
  std::vector<double> xs;
  std::vector<double> alphas;
};

/// Diffusion coefficient alpha of dS = r(t) S dt + alpha(S) dB.
class VolFunction {
 public:
  VolFunction(PowerVol p);
  VolFunction(TableVol t);

  double operator()(double x) const;

  /// True for the noiseless limit alpha == 0 (coefficient 0 power law).
  bool identically_zero() const;
  std::string describe() const;
  const std::variant<PowerVol, TableVol>& spec() const { return spec_; }

 private:
  std::variant<PowerVol, TableVol> spec_;
};

/// Piecewise-constant short rate: rates[j] on [times[j-1], times[j]), with
/// times[-1] = 0 and the last rate extending to infinity.
class RateCurve {
 public:
  RateCurve() : rates_{0.0} {}
  static RateCurve constant(double r);
  static RateCurve piecewise(std::vector<double> times, std::vector<double> rates);

  double rate(double t) const;
  /// Integral of r over [t0, t1].
  double integral(double t0, double t1) const;
  /// beta(t) = exp(-integral(0, t)).
  double discount(double t) const;
  bool is_zero() const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& rates() const { return rates_; }

 private:
  std::vector<double> times_;
  std::vector<double> rates_;
};

}  // namespace bubbleopt
