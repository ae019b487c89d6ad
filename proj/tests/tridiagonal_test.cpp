#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/tridiagonal.hpp"

using namespace bubbleopt;

TEST(Tridiagonal, MatchesDenseSolve) {
  for (int n : {1, 2, 3, 17, 200}) {
    Eigen::ArrayXd lower = Eigen::ArrayXd::Random(n), upper = Eigen::ArrayXd::Random(n);
    Eigen::ArrayXd diag = 3.0 + Eigen::ArrayXd::Random(n).abs();
    Eigen::ArrayXd rhs = Eigen::ArrayXd::Random(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      A(i, i) = diag(i);
      if (i > 0) A(i, i - 1) = lower(i);
      if (i + 1 < n) A(i, i + 1) = upper(i);
    }
    const Eigen::VectorXd dense = A.partialPivLu().solve(rhs.matrix());
    const Eigen::ArrayXd x = solve_tridiagonal(lower, diag, upper, rhs);
    EXPECT_LT((x.matrix() - dense).lpNorm<Eigen::Infinity>(), 1e-12) << n;
  }
}

TEST(Tridiagonal, WorksOnSegmentsAndFloat) {
  Eigen::ArrayXf lower = Eigen::ArrayXf::Constant(5, -1.0f), upper = lower;
  Eigen::ArrayXf diag = Eigen::ArrayXf::Constant(5, 2.0f);
  Eigen::ArrayXf rhs = Eigen::ArrayXf::Zero(5);
  rhs(0) = 1.0f;
  rhs(4) = 1.0f;
  Eigen::ArrayXf x, work;
  solve_tridiagonal(lower.segment(0, 5), diag, upper, rhs, x, work);
  // Discrete Laplace problem with unit boundary data: the solution is constant.
  EXPECT_TRUE(((x - 1.0f).abs() < 1e-5f).all());
}

TEST(Tridiagonal, Errors) {
  Eigen::ArrayXd a = Eigen::ArrayXd::Ones(3), b = Eigen::ArrayXd::Ones(2);
  EXPECT_THROW(solve_tridiagonal(a, a, a, b), ValidationError);
  Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(3);
  EXPECT_THROW(solve_tridiagonal(a, zero, a, a), NumericalError);
  EXPECT_EQ(solve_tridiagonal(Eigen::ArrayXd(), Eigen::ArrayXd(), Eigen::ArrayXd(), Eigen::ArrayXd()).size(), 0);
}
