#pragma once

#include <cmath>

#include <Eigen/Core>

namespace bubbleopt {

/// Running mean and scatter matrix of vector observations.
///
/// Updates follow Welford; `merge` is the pairwise formula of Chan, Golub and
/// LeVeque, so chunked sweeps reduce to the same numbers regardless of how
/// chunks are scheduled.
class Comoments {
 public:
  explicit Comoments(Eigen::Index dim = 0) : mean_(Eigen::VectorXd::Zero(dim)), scatter_(Eigen::MatrixXd::Zero(dim, dim)) {}

  template <typename Derived>
  void push(const Eigen::MatrixBase<Derived>& x) {
    count_ += 1.0;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / count_;
    scatter_.noalias() += ((count_ - 1.0) / count_) * delta * delta.transpose();
  }

  static Comoments merge(const Comoments& a, const Comoments& b) {
    if (a.count_ == 0.0) return b;
    if (b.count_ == 0.0) return a;
    Comoments out;
    out.count_ = a.count_ + b.count_;
    const Eigen::VectorXd delta = b.mean_ - a.mean_;
    out.mean_ = a.mean_ + delta * (b.count_ / out.count_);
    out.scatter_ = a.scatter_ + b.scatter_ + (a.count_ * b.count_ / out.count_) * delta * delta.transpose();
    return out;
  }

  Eigen::Index dim() const { return mean_.size(); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  /// Sum of outer products of deviations from the mean.
  const Eigen::MatrixXd& scatter() const { return scatter_; }

  double mean(Eigen::Index i) const { return mean_[i]; }
  double variance(Eigen::Index i) const { return count_ > 1.0 ? scatter_(i, i) / (count_ - 1.0) : 0.0; }
  double standard_error(Eigen::Index i) const { return count_ > 1.0 ? std::sqrt(variance(i) / count_) : 0.0; }

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

/// Sample mean with its standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;

  double ci(double z = 3.0) const { return z * std_error; }
};

}  // namespace bubbleopt
