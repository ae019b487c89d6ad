#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "bubbleopt/models.hpp"

namespace bubbleopt {

StrictnessDiagnostic is_strict_local_martingale(const std::function<double(double)>& vol) {
  StrictnessDiagnostic out;
  auto integrand = [&](double x) {
    const double a = vol(x);
    return x / (a * a);
  };

  // Tail slope of log(x / alpha^2) on [1e3, 1e6]; the integral diverges when
  // the integrand decays no faster than 1/x.
  constexpr int kSamples = 25;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double lx = std::log(1e3) + (std::log(1e6) - std::log(1e3)) * i / (kSamples - 1);
    const double f = integrand(std::exp(lx));
    if (!(f > 0.0) || !std::isfinite(f)) {
      out.status = StrictnessStatus::QuadratureFailed;
      return out;
    }
    const double ly = std::log(f);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  out.tail_slope = (kSamples * sxy - sx * sy) / (kSamples * sxx - sx * sx);
  // Within kSlopeSlack of -1 the tail cannot be told apart from 1/x (a table
  // vol extended linearly, or 1/(x log x)) on any finite window; call it divergent.
  constexpr double kSlopeSlack = 0.01;
  if (out.tail_slope >= -1.0 - kSlopeSlack) {
    out.status = StrictnessStatus::TrueMartingale;
    out.strict = false;
    out.integral = std::numeric_limits<double>::infinity();
    return out;
  }

  try {
    boost::math::quadrature::exp_sinh<double> quad;
    double l1 = 0.0;
    // exp_sinh integrates over [a, inf) for a finite a.
    out.integral = quad.integrate(integrand, 1.0, std::numeric_limits<double>::infinity(), 1e-10, &out.integral_error, &l1);
  } catch (const std::exception&) {
    out.status = StrictnessStatus::QuadratureFailed;
    return out;
  }
  if (!std::isfinite(out.integral)) {
    out.status = StrictnessStatus::QuadratureFailed;
    return out;
  }
  out.status = StrictnessStatus::Strict;
  out.strict = true;
  return out;
}

}  // namespace bubbleopt
