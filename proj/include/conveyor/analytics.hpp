#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "conveyor/trap.hpp"

namespace conveyor {

// --- Gravity-tilted transverse well ---------------------------------------

/// Extrema of f(rho) = -depth exp(-2 rho^2 / radius^2) + weight rho, with
/// rho the signed vertical coordinate (weight = m g pulls towards -rho).
struct TiltedGaussian {
  bool has_well = false;
  double min_position = 0.0;
  double min_value = 0.0;
  double barrier_position = 0.0;
  double barrier_value = 0.0;

  double depth() const { return has_well ? barrier_value - min_value : 0.0; }
};

/// Locates the extrema by a sign scan of f' followed by bisection to
/// |f'| < 1e-3 weight. Throws NumericalError if bisection fails to converge
/// in 200 iterations.
TiltedGaussian tilted_gaussian_extrema(double depth, double radius, double weight);

/// Barrier height of the well at axial position z once gravity tilts the
/// transverse Gaussian. Equals depth_scale * U(z) when g = 0 or gravity is off.
double effective_depth(const DerivedTrap& d, double z, double depth_scale = 1.0,
                       bool gravity_on = true);

struct EffectiveDepthCurve {
  std::vector<double> z;
  std::vector<double> u_eff;
  std::vector<double> u;
  /// First distance from the focus where the tilted well disappears; NaN if
  /// it survives over the sampled range.
  double z_vanish = 0.0;
};

/// Samples U_eff on [0, z_max] and refines the vanishing point by bisection
/// on the sampled predicate U_eff > 0.
EffectiveDepthCurve effective_depth_curve(const DerivedTrap& d, double z_max, std::size_t samples);

/// Distance where the steepest slope of the transverse Gaussian,
/// U(z) (2 / w(z)) e^{-1/2}, drops to m g. Closed form.
double vanish_distance_tangency(const DerivedTrap& d);

/// CSV columns z_mm, U_eff_over_U0, U_over_U0.
void write_effective_depth_csv(std::ostream& os, const EffectiveDepthCurve& curve,
                               const DerivedTrap& d);

// --- Accelerated frame -----------------------------------------------------

/// -U0 cos^2(k z) + m a z: axial potential seen in a frame accelerating with a.
double accelerated_potential(const DerivedTrap& d, double z, double accel);

/// Barrier height of one well of the accelerated potential; 0 for |a| >= a_max.
double tilted_well_depth(const DerivedTrap& d, double accel);

/// -(2k)^{-1} asin(a / a_max). Throws ConstraintError("no equilibrium exists")
/// for |a| > a_max.
double equilibrium_shift(const DerivedTrap& d, double accel);

/// Worst case of the three sudden acceleration changes 0 -> a -> -a -> 0.
///
/// Each jump is applied at the oscillation phase that maximises the
/// subsequent well-frame energy, found by a dense scan over one full period
/// of the 1D axial motion. Energies are in joules, measured from the bottom
/// of the well the atom is in after the jump.
struct JumpHeating {
  std::array<double, 3> energy{};  // after each jump
  std::array<double, 3> depth{};   // well depth after each jump
  bool escapes = false;
  int escape_jump = -1;            // 0, 1, 2, or -1
};

JumpHeating jump_heating_scan(const DerivedTrap& d, double accel, double initial_energy);

/// Final well-frame energy after the worst-case jump sequence; +infinity
/// when the atom is lost on the way. Throws ConstraintError for |a| > a_max.
double worst_case_jump_energy(const DerivedTrap& d, double accel, double initial_energy);

/// 4 U0 (a/a_max)^2, the small-acceleration limit.
double small_accel_jump_energy(const DerivedTrap& d, double accel);

/// Smallest acceleration whose worst-case jump sequence loses the atom.
double jump_loss_threshold(const DerivedTrap& d, double initial_energy);

// --- Resonant detection -----------------------------------------------------

struct DetectionModel {
  double efficiency = 0.0;    // detected photons per scattering event
  double background = 2.0;    // mean background counts per window
  int threshold = 5;          // detection requires more than this many counts
  double window = 40e-3;      // s

  void validate() const;

  /// Chooses `efficiency` so that an atom at z_ref yields `photons` counts.
  static DetectionModel calibrated(const DerivedTrap& d, double z_ref = 1e-3,
                                   double photons = 40.0);
};

struct Detection {
  double probability;
  double expected_photons;
  double scattering_events;
};

/// An atom at z scatters U(z) / 2E_r photons before it evaporates. Detected
/// when the Poisson count of signal plus background exceeds the threshold.
Detection detection_probability(const DetectionModel& model, const DerivedTrap& d, double z);

/// P(X > threshold) for X ~ Poisson(mean).
double poisson_tail(double mean, int threshold);

}  // namespace conveyor
