#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "conveyor/trap.hpp"

namespace conveyor {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
struct FieldSample {
  Scalar potential;
  Vector3<Scalar> force;
};

/// Potential energy and force of the standing-wave trap at position r.
///
/// U = -U0 s (w0/w)^2 exp(-2 rho^2/w^2) [(1-V)/2 + V cos^2(phase - k z)]
///     + m g (r . up)            (gravity term only when gravity_on)
///
/// with s the depth scale (AOM efficiency, lowering ramp) and V the fringe
/// contrast. Minima are negative; F = -grad U in closed form.
template <typename Derived>
FieldSample<typename Derived::Scalar> evaluate_field(const DerivedTrap& d,
                                                     const Eigen::MatrixBase<Derived>& r,
                                                     double phase, bool gravity_on,
                                                     double depth_scale = 1.0) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::exp;
  using std::sin;
  const auto& cfg = d.config;

  const Scalar x = r(0), y = r(1), z = r(2);
  const Scalar z0 = Scalar(d.rayleigh);
  const Scalar w0_sq = Scalar(cfg.waist) * Scalar(cfg.waist);
  const Scalar k = Scalar(d.wavevector_trap);
  const Scalar visibility = Scalar(cfg.contrast);

  const Scalar envelope = Scalar(1) / (Scalar(1) + z * z / (z0 * z0));  // w0^2 / w^2
  const Scalar w_sq = w0_sq / envelope;
  const Scalar rho_sq = x * x + y * y;
  const Scalar gaussian = exp(Scalar(-2) * rho_sq / w_sq);
  const Scalar u2 = Scalar(2) * (Scalar(phase) - k * z);
  const Scalar fringe = Scalar(0.5) + Scalar(0.5) * visibility * cos(u2);

  const Scalar amplitude = Scalar(d.depth) * Scalar(depth_scale) * envelope * gaussian;
  const Scalar dipole = -amplitude * fringe;

  FieldSample<Scalar> out;
  out.potential = dipole;

  const Scalar radial = Scalar(4) * dipole / w_sq;
  const Scalar dlog_dz = Scalar(-2) * z / (z0 * z0 + z * z) +
                         Scalar(4) * rho_sq * w0_sq * z / (z0 * z0 * w_sq * w_sq);
  const Scalar dfringe_dz = visibility * k * sin(u2);
  out.force(0) = radial * x;
  out.force(1) = radial * y;
  out.force(2) = -(dipole * dlog_dz - amplitude * dfringe_dz);

  if (gravity_on && cfg.gravity != 0.0) {
    const Vector3<Scalar> up = cfg.gravity_axis.template cast<Scalar>();
    const Scalar weight = Scalar(cfg.atom_mass) * Scalar(cfg.gravity);
    out.potential += weight * up.dot(r.template head<3>());
    out.force -= weight * up;
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar potential(const DerivedTrap& d, const Eigen::MatrixBase<Derived>& r,
                                   double phase, bool gravity_on, double depth_scale = 1.0) {
  return evaluate_field(d, r, phase, gravity_on, depth_scale).potential;
}

template <typename Derived>
Vector3<typename Derived::Scalar> force(const DerivedTrap& d, const Eigen::MatrixBase<Derived>& r,
                                        double phase, bool gravity_on, double depth_scale = 1.0) {
  return evaluate_field(d, r, phase, gravity_on, depth_scale).force;
}

}  // namespace conveyor
