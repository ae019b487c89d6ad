#include <algorithm>
#include <cmath>
#include <optional>

#include <boost/random/normal_distribution.hpp>

#include "bubbleopt/errors.hpp"
#include "bubbleopt/models.hpp"
#include "bubbleopt/rng.hpp"

namespace bubbleopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

using Normal = boost::random::normal_distribution<double>;

/// Exact grid sampling of |w + B_t| for a 3-D Brownian motion started at w.
class BesselNorm {
 public:
  explicit BesselNorm(double start) : pos_{start, 0.0, 0.0} {}
  double radius() const { return std::sqrt(pos_[0] * pos_[0] + pos_[1] * pos_[1] + pos_[2] * pos_[2]); }
  void step(double sqrt_dt, Philox4x32& eng, Normal& normal) {
    for (double& c : pos_) c += sqrt_dt * normal(eng);
  }

 private:
  double pos_[3];
};

}  // namespace

PathEnsemble::PathEnsemble(ModelSpec model, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed)
    : model_(std::move(model)), n_paths_(n_paths), n_steps_(n_steps), seed_(seed) {
  if (n_paths == 0) throw ValidationError("n_paths must be at least 1");
  if (n_steps == 0) throw ValidationError("n_steps must be at least 1");
  model_.validate();
  grid_.resize(static_cast<Eigen::Index>(n_steps + 1));
  for (std::size_t k = 0; k <= n_steps; ++k)
    grid_[static_cast<Eigen::Index>(k)] = model_.horizon * static_cast<double>(k) / static_cast<double>(n_steps);
}

Eigen::Index PathEnsemble::index_at_or_after(double t) const {
  if (t < 0.0 || t > model_.horizon * (1.0 + 1e-12) || std::isnan(t))
    throw ValidationError("time " + std::to_string(t) + " lies outside the grid [0, T]");
  const double pos = t / model_.horizon * static_cast<double>(n_steps_);
  const auto k = static_cast<Eigen::Index>(std::ceil(pos - 1e-9));
  return std::clamp<Eigen::Index>(k, 0, static_cast<Eigen::Index>(n_steps_));
}

PathBundle PathEnsemble::path(std::size_t i) const {
  PathBundle out;
  realize(i, out);
  return out;
}

void PathEnsemble::realize(std::size_t i, PathBundle& out) const {
  if (i >= n_paths_) throw ValidationError("path index out of range");
  const Eigen::Index n = static_cast<Eigen::Index>(n_steps_) + 1;
  out.s.resize(n);
  out.beta.resize(n);
  out.z.resize(n);
  out.y.resize(n);
  out.l.resize(n);

  Philox4x32 eng(seed_, i);
  Normal normal;
  const double dt = model_.horizon / static_cast<double>(n_steps_);
  const double sqrt_dt = std::sqrt(dt);

  // Optional independent Bessel driver for Z; advanced after S within each step.
  std::optional<BesselNorm> z_driver;
  if (const auto* zd = std::get_if<ReciprocalBesselDeflator>(&model_.deflator)) z_driver.emplace(1.0 / zd->z0);
  auto advance_z = [&](Eigen::Index k) {
    if (z_driver) {
      if (k > 0) z_driver->step(sqrt_dt, eng, normal);
      out.z[k] = 1.0 / z_driver->radius();
    } else {
      out.z[k] = 1.0;
    }
  };

  std::visit(
      overloaded{
          [&](const ReciprocalBessel3D& m) {
            BesselNorm r(1.0 / m.s0);
            for (Eigen::Index k = 0; k < n; ++k) {
              if (k > 0) r.step(sqrt_dt, eng, normal);
              out.s[k] = k == 0 ? m.s0 : 1.0 / r.radius();
              out.beta[k] = 1.0;
              advance_z(k);
            }
          },
          [&](const Bessel3D& m) {
            BesselNorm r(m.s0);
            for (Eigen::Index k = 0; k < n; ++k) {
              if (k > 0) r.step(sqrt_dt, eng, normal);
              out.s[k] = k == 0 ? m.s0 : r.radius();
              out.beta[k] = 1.0;
              out.z[k] = 1.0 / out.s[k];
            }
          },
          [&](const LocalVolDiffusion& m) {
            const bool noiseless = m.vol.identically_zero();
            double raw = m.s0;
            for (Eigen::Index k = 0; k < n; ++k) {
              if (k > 0) {
                const double t0 = grid_[k - 1];
                const double t1 = grid_[k];
                // Full truncation: coefficients see max(raw, 0); the linear drift is integrated exactly.
                const double pos = std::max(raw, 0.0);
                const double growth = std::expm1(m.rate.integral(t0, t1));
                double diffusion = 0.0;
                if (!noiseless) {
                  const double a = m.vol(pos);
                  if (pos > 0.0 && (!(a > 0.0) || !std::isfinite(a)))
                    throw ValidationError("vol returned a nonpositive value at x = " + std::to_string(pos));
                  diffusion = a * sqrt_dt * normal(eng);
                }
                raw += pos * growth + diffusion;
              }
              out.s[k] = std::max(raw, 0.0);
              out.beta[k] = m.rate.discount(grid_[k]);
              out.z[k] = 1.0;
            }
          },
          [&](const DeterministicJump& m) {
            const Eigen::Index jump = index_at_or_after(m.t0);
            for (Eigen::Index k = 0; k < n; ++k) {
              const bool after = k >= jump;
              out.s[k] = after ? m.s_post : m.s_pre;
              out.beta[k] = after ? m.beta_post : m.beta_pre;
              advance_z(k);
            }
          },
      },
      model_.dynamics);

  out.y = out.z * out.beta;
  if (std::holds_alternative<ReciprocalOfPrice>(model_.deflator)) {
    out.l = out.beta;  // Z S = 1 identically
  } else {
    out.l = out.y * out.s;
  }
}

PathEnsemble simulate_paths(const ModelSpec& model, std::size_t n_paths, std::size_t n_steps, std::uint64_t seed) {
  return PathEnsemble(model, n_paths, n_steps, seed);
}

}  // namespace bubbleopt
