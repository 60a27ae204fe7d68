#pragma once

#include <numbers>

namespace conveyor::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * pi;

// CODATA 2018, exact where the SI defines them.
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double boltzmann = 1.380649e-23;       // J / K
inline constexpr double speed_of_light = 299792458.0;   // m / s
inline constexpr double standard_gravity = 9.80665;     // m / s^2

// Cesium-133
namespace cesium {
inline constexpr double mass = 2.20694657e-25;          // kg
inline constexpr double wavelength_d1 = 894.59296e-9;   // m
inline constexpr double wavelength_d2 = 852.34727e-9;   // m
inline constexpr double linewidth = two_pi * 5.2e6;     // rad / s, D2 line
inline constexpr double saturation_intensity = 11.0;    // W / m^2 (1.1 mW/cm^2)
}  // namespace cesium

}  // namespace conveyor::constants
