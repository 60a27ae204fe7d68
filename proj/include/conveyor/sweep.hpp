#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace conveyor {

/// One linear piece of the optical mutual detuning Delta-nu(t), in Hz.
struct SweepSegment {
  double duration;
  double detuning_start;
  double detuning_end;
};

/// Standing-wave kinematics at one instant.
struct SweepState {
  double phase;         // pi * int Delta-nu dt, rad
  double position;      // z_sw, m
  double velocity;      // lambda Delta-nu / 2, m/s
  double acceleration;  // m/s^2
  double detuning;      // Delta-nu, Hz
};

/// Piecewise-linear detuning schedule. The standing-wave position is the
/// exact piecewise-quadratic integral (lambda/2) int Delta-nu dt.
///
/// Segments must join continuously in detuning. Past the end the wave is
/// frozen at its final position.
class SweepProfile {
 public:
  SweepProfile() = default;
  SweepProfile(std::vector<SweepSegment> segments, double wavelength);

  /// Standing wave at rest for `duration` seconds.
  static SweepProfile hold(double duration, double wavelength);

  /// Concatenation; `next` continues from this profile's final position.
  SweepProfile then(const SweepProfile& next) const;

  double total_duration() const { return total_duration_; }
  double wavelength() const { return wavelength_; }
  std::span<const SweepSegment> segments() const { return segments_; }

  /// Throws ConfigError for t < 0.
  SweepState state(double t) const;
  /// Same as state(t) but resumes the segment search at `*cursor`, for
  /// monotone time stepping.
  SweepState state(double t, std::size_t* cursor) const;

  /// Net standing-wave displacement at the end of the profile.
  double final_position() const;
  double max_abs_detuning() const;

 private:
  SweepState evaluate(std::size_t index, double t) const;

  std::vector<SweepSegment> segments_;
  std::vector<double> start_time_;
  std::vector<double> start_cycles_;
  double wavelength_ = 1064e-9;
  double total_duration_ = 0.0;
  double total_cycles_ = 0.0;
};

inline SweepState sw_state(const SweepProfile& p, double t) { return p.state(t); }

/// Uniform acceleration over d/2 followed by uniform deceleration:
/// t_d = 2 sqrt(|d|/a), peak detuning 2 v_max / lambda. The sign of d sets
/// the direction. `max_detuning` (optical, Hz) rejects sweeps the AOMs
/// cannot follow.
SweepProfile transport_profile(double distance, double accel, double wavelength,
                               std::optional<double> max_detuning = std::nullopt);

/// `legs` transports of |d| with alternating direction, starting with +d.
SweepProfile shuttle_profile(double distance, double accel, int legs, double wavelength,
                             std::optional<double> max_detuning = std::nullopt);

/// Transport with the acceleration switched on and off smoothly
/// (raised-cosine edges of length `ramp_time`), approximated by
/// `steps_per_ramp` constant-acceleration pieces per edge. Peak acceleration
/// is `peak_accel`; the displacement is exact.
SweepProfile smooth_transport_profile(double distance, double peak_accel, double ramp_time,
                                      double wavelength, int steps_per_ramp = 32);

/// Heterodyne beat cycles int |Delta-nu| dt over the whole profile. Each
/// cycle is a lambda/2 step of the standing wave.
double cycle_count(const SweepProfile& p);

/// AOM deflection efficiency versus RF offset from the centre frequency.
struct AomModel {
  double center_freq = 80e6;  // f0, Hz
  double max_offset = 25e6;   // largest RF offset the driver can reach, Hz
  /// (|Delta f| in Hz, efficiency) pairs, ascending in |Delta f|, linearly
  /// interpolated, clamped past the last point.
  std::vector<std::pair<double, double>> efficiency_curve{{0.0, 1.0}, {10e6, 0.5}};
  bool double_pass = true;
  /// Trap depth follows the beam power (eta) when false, or the
  /// interference amplitude sqrt(eta) when true.
  bool sqrt_depth = false;

  void validate() const;
  /// Largest optical mutual detuning reachable, Hz.
  double max_detuning() const { return max_offset * (double_pass ? 2.0 : 1.0); }
  double efficiency(double rf_offset) const;
};

/// Multiplicative trap-depth factor at optical mutual detuning Delta-nu.
double depth_scaling(const AomModel& m, double detuning);

/// CSV columns t_s, detuning_Hz, z_sw_m, v_sw_m_s, a_sw_m_s2 sampled at
/// `sample_rate` (plus the final instant).
void write_profile_csv(std::ostream& os, const SweepProfile& p, double sample_rate);

}  // namespace conveyor
