#include "conveyor/trap.hpp"

#include <cmath>
#include <sstream>

#include "conveyor/error.hpp"

namespace conveyor {

using constants::boltzmann;
using constants::hbar;
using constants::pi;
using constants::speed_of_light;
using constants::two_pi;

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    std::ostringstream os;
    os << name << " must be positive and finite (got " << value << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace

void TrapConfig::validate() const {
  require_positive(power_total, "power_total");
  require_positive(waist, "waist");
  require_positive(wavelength_trap, "wavelength_trap");
  require_positive(wavelength_d1, "wavelength_d1");
  require_positive(wavelength_d2, "wavelength_d2");
  require_positive(linewidth, "linewidth");
  require_positive(saturation_intensity, "saturation_intensity");
  require_positive(atom_mass, "atom_mass");
  if (!(gravity >= 0.0)) throw ConfigError("gravity must be non-negative");
  if (std::abs(gravity_axis.norm() - 1.0) > 1e-9)
    throw ConfigError("gravity_axis must be a unit vector");
  if (!(contrast > 0.0 && contrast <= 1.0))
    throw ConfigError("contrast must lie in (0, 1]");
  if (rayleigh_override) require_positive(*rayleigh_override, "rayleigh_override");
  if (!(wavelength_trap > wavelength_d1)) {
    warn("trap laser is not red detuned from the D1 line; potential is repulsive");
  }
}

double effective_detuning(const TrapConfig& cfg) {
  // Angular detuning of the trap laser below each D line.
  const double delta1 =
      two_pi * speed_of_light * (1.0 / cfg.wavelength_d1 - 1.0 / cfg.wavelength_trap);
  const double delta2 =
      two_pi * speed_of_light * (1.0 / cfg.wavelength_d2 - 1.0 / cfg.wavelength_trap);
  if (delta1 == 0.0 || delta2 == 0.0) throw ConstraintError("resonant trap laser");
  const double inverse = (1.0 / delta1 + 2.0 / delta2) / 3.0;
  if (inverse == 0.0) throw ConstraintError("resonant trap laser");
  return 1.0 / inverse;
}

DerivedTrap derive(const TrapConfig& cfg) {
  cfg.validate();

  DerivedTrap d;
  d.config = cfg;
  const double m = cfg.atom_mass;
  const double gamma = cfg.linewidth;
  const double w0 = cfg.waist;

  d.detuning_eff = effective_detuning(cfg);
  d.wavevector_trap = two_pi / cfg.wavelength_trap;
  d.wavevector_d2 = two_pi / cfg.wavelength_d2;
  d.rayleigh = cfg.rayleigh_override.value_or(pi * w0 * w0 / cfg.wavelength_trap);

  const double saturation = cfg.power_total / (pi * w0 * w0 * cfg.saturation_intensity);
  d.depth = 0.5 * hbar * gamma * saturation * gamma / d.detuning_eff;
  d.scatter_rate = gamma / d.detuning_eff * d.depth / hbar;

  const double k = d.wavevector_trap;
  d.freq_axial = k * std::sqrt(2.0 * d.depth / m);
  d.freq_radial = std::sqrt(4.0 * d.depth / (m * w0 * w0));
  d.gs_axial = std::sqrt(hbar / (2.0 * m * d.freq_axial));
  d.gs_radial = std::sqrt(hbar / (2.0 * m * d.freq_radial));
  d.accel_max = d.depth * k / m;

  const double p_photon = hbar * d.wavevector_d2;
  d.recoil_energy = p_photon * p_photon / (2.0 * m);
  d.light_pressure_accel = p_photon * gamma / (2.0 * m);
  d.doppler_temp = hbar * gamma / (2.0 * boltzmann);
  return d;
}

ThermalWidths thermal_localization(const DerivedTrap& d, double temperature) {
  if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
  const double v2 = boltzmann * temperature / d.mass();
  return {std::sqrt(v2) / d.freq_axial, std::sqrt(v2) / d.freq_radial};
}

double beam_radius(const DerivedTrap& d, double z) {
  const double s = z / d.rayleigh;
  return d.waist() * std::sqrt(1.0 + s * s);
}

double local_depth(const DerivedTrap& d, double z) {
  const double s = z / d.rayleigh;
  return d.depth / (1.0 + s * s);
}

}  // namespace conveyor
