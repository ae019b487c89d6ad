#include "bubbleopt/models.hpp"

#include <cmath>
#include <sstream>

#include "bubbleopt/errors.hpp"

namespace bubbleopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be positive and finite");
}

}  // namespace

void ModelSpec::validate() const {
  require_positive(horizon, "horizon");
  if (const auto* z = std::get_if<ReciprocalBesselDeflator>(&deflator); z && z->z0 != 1.0)
    throw ValidationError("deflator must start at Z_0 = 1");

  std::visit(
      overloaded{
          [&](const ReciprocalBessel3D& m) {
            require_positive(m.s0, "s0");
            if (std::holds_alternative<ReciprocalOfPrice>(deflator))
              throw ValidationError("reciprocal-of-price deflator requires bessel_3d dynamics");
          },
          [&](const Bessel3D& m) {
            require_positive(m.s0, "s0");
            if (!std::holds_alternative<ReciprocalOfPrice>(deflator))
              throw ValidationError("bessel_3d dynamics need the reciprocal_of_price deflator (otherwise L is not a local martingale)");
            if (m.s0 != 1.0) throw ValidationError("bessel_3d with Z = 1/S needs s0 = 1 so that Z_0 = 1");
          },
          [&](const LocalVolDiffusion& m) {
            require_positive(m.s0, "s0");
            if (!std::holds_alternative<TriviallyOne>(deflator))
              throw ValidationError("local-vol dynamics are specified under the pricing measure; deflator must be trivially_one");
            if (!m.vol.identically_zero()) {
              for (double x : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e3, 1e6}) {
                const double a = m.vol(x);
                if (!(a > 0.0) || !std::isfinite(a))
                  throw ValidationError("vol must be positive on (0, inf); alpha(" + std::to_string(x) + ") = " + std::to_string(a));
              }
            }
          },
          [&](const DeterministicJump& m) {
            require_positive(m.s_pre, "s_pre");
            require_positive(m.s_post, "s_post");
            require_positive(m.beta_post, "beta_post");
            if (!(m.t0 > 0.0 && m.t0 < horizon)) throw ValidationError("jump time t0 must lie in (0, horizon)");
            if (m.beta_pre != 1.0) throw ValidationError("beta_pre must be 1 (beta_0 = 1)");
            if (m.beta_post > m.beta_pre) throw ValidationError("beta must be nonincreasing");
            const double pre = m.beta_pre * m.s_pre;
            const double post = m.beta_post * m.s_post;
            if (std::abs(pre - post) > 1e-12 * std::max(pre, post))
              throw ValidationError("beta*S must not jump, otherwise L = Z beta S is not a local martingale");
            if (std::holds_alternative<ReciprocalOfPrice>(deflator))
              throw ValidationError("reciprocal-of-price deflator requires bessel_3d dynamics");
          },
      },
      dynamics);
}

double ModelSpec::s0() const {
  return std::visit(overloaded{
                        [](const ReciprocalBessel3D& m) { return m.s0; },
                        [](const Bessel3D& m) { return m.s0; },
                        [](const LocalVolDiffusion& m) { return m.s0; },
                        [](const DeterministicJump& m) { return m.s_pre; },
                    },
                    dynamics);
}

double ModelSpec::beta(double t) const {
  return std::visit(overloaded{
                        [&](const LocalVolDiffusion& m) { return m.rate.discount(t); },
                        [&](const DeterministicJump& m) { return t < m.t0 ? m.beta_pre : m.beta_post; },
                        [](const auto&) { return 1.0; },
                    },
                    dynamics);
}

bool ModelSpec::deflator_is_ui_martingale() const { return std::holds_alternative<TriviallyOne>(deflator); }

std::string ModelSpec::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const ReciprocalBessel3D& m) { os << "reciprocal_bessel_3d(s0=" << m.s0 << ")"; },
                 [&](const Bessel3D& m) { os << "bessel_3d(s0=" << m.s0 << ")"; },
                 [&](const LocalVolDiffusion& m) {
                   os << "local_vol(s0=" << m.s0 << ", vol=" << m.vol.describe() << ", r0=" << m.rate.rates().front() << ")";
                 },
                 [&](const DeterministicJump& m) {
                   os << "deterministic_jump(t0=" << m.t0 << ", S: " << m.s_pre << "->" << m.s_post << ", beta: " << m.beta_pre
                      << "->" << m.beta_post << ")";
                 },
             },
             dynamics);
  std::visit(overloaded{
                 [&](const TriviallyOne&) { os << ", Z=1"; },
                 [&](const ReciprocalBesselDeflator& z) { os << ", Z=reciprocal_bessel_3d(z0=" << z.z0 << ")"; },
                 [&](const ReciprocalOfPrice&) { os << ", Z=1/S"; },
             },
             deflator);
  os << ", T=" << horizon;
  return os.str();
}

Eigen::ArrayXd payoff_process(const PathBundle& path, const PayoffSpec& payoff) {
  return path.y * path.s.unaryExpr([&](double s) { return payoff.value(s); });
}

}  // namespace bubbleopt
