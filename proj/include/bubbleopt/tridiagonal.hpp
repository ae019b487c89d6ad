#pragma once

#include <cmath>

#include <Eigen/Core>

#include "bubbleopt/errors.hpp"

namespace bubbleopt {

/// Thomas algorithm for the tridiagonal system
///   lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i],
/// with lower[0] and upper[n-1] ignored. `work` is scratch of size n. Stable
/// without pivoting for diagonally dominant systems, which is what the
/// implicit parabolic steps produce.
template <typename DerivedL, typename DerivedD, typename DerivedU, typename DerivedR, typename DerivedX>
void solve_tridiagonal(const Eigen::DenseBase<DerivedL>& lower, const Eigen::DenseBase<DerivedD>& diag,
                       const Eigen::DenseBase<DerivedU>& upper, const Eigen::DenseBase<DerivedR>& rhs,
                       Eigen::DenseBase<DerivedX>& x, Eigen::Array<typename DerivedD::Scalar, Eigen::Dynamic, 1>& work) {
  using Scalar = typename DerivedD::Scalar;
  const Eigen::Index n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw ValidationError("tridiagonal system has inconsistent sizes");
  x.derived().resize(n);
  work.resize(n);
  if (n == 0) return;

  Scalar denom = diag(0);
  if (denom == Scalar(0)) throw NumericalError("zero pivot in tridiagonal solve");
  work(0) = upper(0) / denom;
  x(0) = rhs(0) / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag(i) - lower(i) * work(i - 1);
    if (denom == Scalar(0)) throw NumericalError("zero pivot in tridiagonal solve");
    work(i) = i + 1 < n ? upper(i) / denom : Scalar(0);
    x(i) = (rhs(i) - lower(i) * x(i - 1)) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) x(i) -= work(i) * x(i + 1);
}

/// Convenience overload returning the solution.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> solve_tridiagonal(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& lower,
                                                          const Eigen::Array<Scalar, Eigen::Dynamic, 1>& diag,
                                                          const Eigen::Array<Scalar, Eigen::Dynamic, 1>& upper,
                                                          const Eigen::Array<Scalar, Eigen::Dynamic, 1>& rhs) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> x, work;
  solve_tridiagonal(lower, diag, upper, rhs, x, work);
  return x;
}

}  // namespace bubbleopt
