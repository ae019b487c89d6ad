#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace bubbleopt {

/// Scalars, as opposed to Eigen expressions.
template <typename T>
concept ScalarLike = !requires { T::RowsAtCompileTime; };

/// Standard normal CDF.
template <ScalarLike Scalar>
Scalar normal_cdf(Scalar x) {
  using std::erfc;
  return Scalar(0.5) * erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

/// Standard normal density.
template <ScalarLike Scalar>
Scalar normal_pdf(Scalar x) {
  using std::exp;
  return std::numbers::inv_sqrtpi_v<Scalar> / std::numbers::sqrt2_v<Scalar> *
         exp(Scalar(-0.5) * x * x);
}

template <typename Derived>
auto normal_cdf(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return normal_cdf(v); });
}

}  // namespace bubbleopt
