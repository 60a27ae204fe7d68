#include "conveyor/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "conveyor/constants.hpp"
#include "conveyor/error.hpp"

namespace conveyor {

using constants::pi;

namespace {

constexpr int kMaxBisection = 200;

// Bisection for a sign change of `fn` on [lo, hi]; fn(lo) and fn(hi) differ
// in sign. Stops once |fn| < tol or the bracket collapses.
template <typename Fn>
double bisect(Fn&& fn, double lo, double hi, double tol) {
  double f_lo = fn(lo);
  for (int it = 0; it < kMaxBisection; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = fn(mid);
    if (std::abs(f_mid) < tol || mid == lo || mid == hi) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  throw NumericalError("bisection did not converge in 200 iterations");
}

}  // namespace

TiltedGaussian tilted_gaussian_extrema(double depth, double radius, double weight) {
  TiltedGaussian out;
  if (!(depth > 0.0)) return out;
  auto f = [&](double rho) {
    return -depth * std::exp(-2.0 * rho * rho / (radius * radius)) + weight * rho;
  };
  if (weight == 0.0) {
    out.has_well = true;
    out.min_value = -depth;
    out.barrier_position = -std::numeric_limits<double>::infinity();
    out.barrier_value = 0.0;
    return out;
  }
  auto slope = [&](double rho) {
    return depth * 4.0 * rho / (radius * radius) * std::exp(-2.0 * rho * rho / (radius * radius)) +
           weight;
  };

  // Walk downhill from the axis: f' turns negative past the well bottom and
  // positive again past the barrier.
  constexpr int kGrid = 4096;
  const double span = 8.0 * radius;
  const double step = span / kGrid;
  int first_negative = -1, recovered = -1;
  for (int i = 1; i <= kGrid; ++i) {
    const double s = slope(-i * step);
    if (first_negative < 0) {
      if (s < 0.0) first_negative = i;
    } else if (s > 0.0) {
      recovered = i;
      break;
    }
  }
  if (first_negative < 0 || recovered < 0) return out;

  const double tol = 1e-3 * weight;
  out.min_position = bisect(slope, -first_negative * step, -(first_negative - 1) * step, tol);
  out.barrier_position = bisect(slope, -recovered * step, -(recovered - 1) * step, tol);
  out.min_value = f(out.min_position);
  out.barrier_value = f(out.barrier_position);
  out.has_well = out.barrier_value > out.min_value;
  return out;
}

double effective_depth(const DerivedTrap& d, double z, double depth_scale, bool gravity_on) {
  const double weight = gravity_on ? d.mass() * d.config.gravity : 0.0;
  const double u = depth_scale * local_depth(d, z);
  if (weight == 0.0) return u;
  return tilted_gaussian_extrema(u, beam_radius(d, z), weight).depth();
}

EffectiveDepthCurve effective_depth_curve(const DerivedTrap& d, double z_max, std::size_t samples) {
  if (samples < 2) throw ConfigError("effective-depth curve needs at least 2 samples");
  if (!(z_max > 0.0)) throw ConfigError("z_max must be positive");
  EffectiveDepthCurve c;
  c.z_vanish = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < samples; ++i) {
    const double z = z_max * static_cast<double>(i) / static_cast<double>(samples - 1);
    c.z.push_back(z);
    c.u_eff.push_back(effective_depth(d, z));
    c.u.push_back(local_depth(d, z));
  }
  for (std::size_t i = 1; i < samples; ++i) {
    if (c.u_eff[i - 1] > 0.0 && c.u_eff[i] <= 0.0) {
      double lo = c.z[i - 1], hi = c.z[i];
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (effective_depth(d, mid) > 0.0 ? lo : hi) = mid;
      }
      c.z_vanish = 0.5 * (lo + hi);
      break;
    }
  }
  return c;
}

double vanish_distance_tangency(const DerivedTrap& d) {
  const double weight = d.mass() * d.config.gravity;
  if (weight == 0.0) return std::numeric_limits<double>::infinity();
  // U0 (1+s)^-1 * 2 e^{-1/2} / (w0 (1+s)^{1/2}) = m g,  s = z^2 / z0^2
  const double ratio = 2.0 * d.depth * std::exp(-0.5) / (d.waist() * weight);
  if (ratio <= 1.0) return 0.0;
  return d.rayleigh * std::sqrt(std::pow(ratio, 2.0 / 3.0) - 1.0);
}

void write_effective_depth_csv(std::ostream& os, const EffectiveDepthCurve& curve,
                               const DerivedTrap& d) {
  os << "z_mm,U_eff_over_U0,U_over_U0\n";
  const auto old = os.precision(10);
  for (std::size_t i = 0; i < curve.z.size(); ++i)
    os << curve.z[i] * 1e3 << ',' << curve.u_eff[i] / d.depth << ',' << curve.u[i] / d.depth
       << '\n';
  os.precision(old);
}

double accelerated_potential(const DerivedTrap& d, double z, double accel) {
  const double c = std::cos(d.wavevector_trap * z);
  return -d.depth * c * c + d.mass() * accel * z;
}

namespace {

// Dimensionless axial motion: x = k z, energies in U0, time in
// sqrt(m / (U0 k^2)). V(x) = -cos^2 x + alpha x.
double tilted(double x, double alpha) {
  const double c = std::cos(x);
  return -c * c + alpha * x;
}

double tilted_min_value(double alpha) {
  const double x = -0.5 * std::asin(alpha);
  return tilted(x, alpha);
}

double tilted_depth(double alpha) {
  const double a = std::abs(alpha);
  if (a >= 1.0) return 0.0;
  const double x_min = -0.5 * std::asin(a);
  const double x_bar = -0.5 * pi + 0.5 * std::asin(a);
  return tilted(x_bar, a) - tilted(x_min, a);
}

struct Phase {
  double x;
  double v;
};

// Velocity-Verlet samples over one full oscillation period in the well
// tilted by alpha, starting from `start`.
std::vector<Phase> one_period(Phase start, double alpha) {
  constexpr double dt = 1e-3;
  constexpr std::size_t kMaxSteps = 20'000'000;
  std::vector<Phase> out{start};
  Phase s = start;
  auto accel = [alpha](double x) { return -std::sin(2.0 * x) - alpha; };
  double a = accel(s.x);
  if (s.v == 0.0 && std::abs(a) < 1e-15) return out;  // resting at the bottom
  int reversals = 0;
  double last_sign = 0.0;
  for (std::size_t step = 0; step < kMaxSteps && reversals < 2; ++step) {
    s.v += 0.5 * dt * a;
    s.x += dt * s.v;
    a = accel(s.x);
    s.v += 0.5 * dt * a;
    out.push_back(s);
    const double sign = (s.v > 0.0) - (s.v < 0.0);
    if (sign != 0.0) {
      if (last_sign != 0.0 && sign != last_sign) ++reversals;
      last_sign = sign;
    }
  }
  return out;
}

}  // namespace

double tilted_well_depth(const DerivedTrap& d, double accel) {
  return d.depth * tilted_depth(accel / d.accel_max);
}

double equilibrium_shift(const DerivedTrap& d, double accel) {
  const double alpha = accel / d.accel_max;
  if (std::abs(alpha) > 1.0) throw ConstraintError("no equilibrium exists");
  return -std::asin(alpha) / (2.0 * d.wavevector_trap);
}

JumpHeating jump_heating_scan(const DerivedTrap& d, double accel, double initial_energy) {
  const double alpha = accel / d.accel_max;
  if (std::abs(alpha) > 1.0) throw ConstraintError("acceleration exceeds a_max");
  if (initial_energy < 0.0) throw ConfigError("initial energy must be non-negative");
  const double e0 = initial_energy / d.depth;
  if (e0 >= 1.0) throw ConfigError("initial energy must lie below the trap depth");

  JumpHeating out;
  // Start at a turning point of the untilted orbit with energy e0.
  Phase state{std::acos(std::sqrt(1.0 - e0)), 0.0};
  double current = 0.0;
  const std::array<double, 3> sequence{alpha, -alpha, 0.0};
  for (int j = 0; j < 3; ++j) {
    const double next = sequence[j];
    const double bottom = tilted_min_value(next);
    double best = -std::numeric_limits<double>::infinity();
    Phase worst = state;
    for (const Phase& p : one_period(state, current)) {
      const double e = 0.5 * p.v * p.v + tilted(p.x, next) - bottom;
      if (e > best) {
        best = e;
        worst = p;
      }
    }
    out.energy[j] = best * d.depth;
    out.depth[j] = tilted_depth(next) * d.depth;
    if (best >= tilted_depth(next)) {
      out.escapes = true;
      out.escape_jump = j;
      for (int k = j + 1; k < 3; ++k) {
        out.energy[k] = std::numeric_limits<double>::infinity();
        out.depth[k] = tilted_depth(sequence[k]) * d.depth;
      }
      return out;
    }
    state = worst;
    current = next;
  }
  return out;
}

double worst_case_jump_energy(const DerivedTrap& d, double accel, double initial_energy) {
  if (std::abs(accel) > d.accel_max) throw ConstraintError("acceleration exceeds a_max");
  if (accel == 0.0) return initial_energy;
  const JumpHeating j = jump_heating_scan(d, accel, initial_energy);
  return j.escapes ? std::numeric_limits<double>::infinity() : j.energy[2];
}

double small_accel_jump_energy(const DerivedTrap& d, double accel) {
  const double alpha = accel / d.accel_max;
  return 4.0 * d.depth * alpha * alpha;
}

double jump_loss_threshold(const DerivedTrap& d, double initial_energy) {
  auto lost = [&](double alpha) {
    return jump_heating_scan(d, alpha * d.accel_max, initial_energy).escapes;
  };
  // Coarse scan for the first losing acceleration, then refine.
  constexpr double kStep = 0.01;
  double lo = 0.0, hi = 1.0;
  for (double alpha = kStep; alpha < 1.0; alpha += kStep) {
    if (lost(alpha)) {
      hi = alpha;
      break;
    }
    lo = alpha;
  }
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lost(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi) * d.accel_max;
}

void DetectionModel::validate() const {
  if (!(efficiency > 0.0 && efficiency < 1.0))
    throw ConfigError("detection efficiency must lie in (0, 1)");
  if (!(background >= 0.0)) throw ConfigError("background must be non-negative");
  if (!(threshold > background)) throw ConfigError("threshold must exceed the background");
  if (!(window > 0.0)) throw ConfigError("window must be positive");
}

DetectionModel DetectionModel::calibrated(const DerivedTrap& d, double z_ref, double photons) {
  DetectionModel m;
  const double events = local_depth(d, z_ref) / (2.0 * d.recoil_energy);
  m.efficiency = photons / events;
  m.validate();
  return m;
}

double poisson_tail(double mean, int threshold) {
  if (threshold < 0) return 1.0;
  if (mean <= 0.0) return 0.0;
  double term = std::exp(-mean);
  double cdf = term;
  for (int k = 1; k <= threshold; ++k) {
    term *= mean / k;
    cdf += term;
  }
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

Detection detection_probability(const DetectionModel& model, const DerivedTrap& d, double z) {
  const double events = local_depth(d, z) / (2.0 * d.recoil_energy);
  const double photons = model.efficiency * events;
  return {poisson_tail(photons + model.background, model.threshold), photons, events};
}

}  // namespace conveyor
