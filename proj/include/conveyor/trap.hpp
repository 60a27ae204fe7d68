#pragma once

#include <optional>

#include <Eigen/Dense>

#include "conveyor/constants.hpp"

namespace conveyor {

/// Laser, beam and atom inputs of a standing-wave dipole trap. SI units.
///
/// The optical axis is z. `power_total` is the sum over both counter-
/// propagating beams, which are taken to carry equal power. `gravity_axis`
/// points "up": the gravitational potential is m g (r . gravity_axis).
struct TrapConfig {
  double power_total = 4.0;
  double waist = 30e-6;
  double wavelength_trap = 1064e-9;
  double wavelength_d1 = constants::cesium::wavelength_d1;
  double wavelength_d2 = constants::cesium::wavelength_d2;
  double linewidth = constants::cesium::linewidth;
  double saturation_intensity = constants::cesium::saturation_intensity;
  double atom_mass = constants::cesium::mass;
  double gravity = constants::standard_gravity;
  Eigen::Vector3d gravity_axis = Eigen::Vector3d::UnitX();
  /// Interference visibility of the standing wave, in (0, 1].
  double contrast = 1.0;
  /// Replaces pi w0^2 / lambda when set.
  std::optional<double> rayleigh_override;

  /// Throws ConfigError on a violated invariant; warns if the trap laser is
  /// blue of the D1 line.
  void validate() const;
};

/// Closed-form trap quantities. Immutable once built by `derive`.
struct DerivedTrap {
  TrapConfig config;

  double depth = 0;                 // U0, J
  double rayleigh = 0;              // z0, m
  double detuning_eff = 0;          // Delta, rad/s
  double scatter_rate = 0;          // Gamma_sc, 1/s
  double freq_axial = 0;            // Omega_z, rad/s
  double freq_radial = 0;           // Omega_rad, rad/s
  double gs_axial = 0;              // ground-state rms size, m
  double gs_radial = 0;             // m
  double accel_max = 0;             // m/s^2
  double recoil_energy = 0;         // E_r, J
  double wavevector_trap = 0;       // k, rad/m
  double wavevector_d2 = 0;         // k_D2, rad/m
  double light_pressure_accel = 0;  // a_R, m/s^2
  double doppler_temp = 0;          // T_D, K

  double mass() const { return config.atom_mass; }
  double waist() const { return config.waist; }
  double wavelength() const { return config.wavelength_trap; }
  double photon_momentum() const { return constants::hbar * wavevector_d2; }
  double depth_mK() const { return depth / constants::boltzmann * 1e3; }
};

/// Effective far-off-resonance detuning, 1/Delta = (1/Delta1 + 2/Delta2)/3.
/// Positive for red detuning. Throws ConstraintError("resonant trap laser").
double effective_detuning(const TrapConfig& cfg);

DerivedTrap derive(const TrapConfig& cfg);

struct ThermalWidths {
  double axial;
  double radial;
};

/// Equipartition rms widths sqrt(kB T / (m Omega^2)) along each axis.
ThermalWidths thermal_localization(const DerivedTrap& d, double temperature);

/// w(z) = w0 sqrt(1 + z^2/z0^2).
double beam_radius(const DerivedTrap& d, double z);

/// U(z) = U0 / (1 + z^2/z0^2).
double local_depth(const DerivedTrap& d, double z);

}  // namespace conveyor
