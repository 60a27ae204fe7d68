#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "conveyor/constants.hpp"
#include "conveyor/sweep.hpp"
#include "conveyor/trap.hpp"

namespace conveyor {

using Rng = std::mt19937_64;

/// Independent generator for trajectory `index` of a run seeded with `seed`.
/// Streams depend only on (seed, index), never on scheduling.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

struct AtomState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double time = 0.0;
};

/// Stochastic heating and loss channels applied between integrator steps.
struct NoiseChannels {
  bool photon_recoil = false;
  double recoil_rate_scale = 1.0;  // multiplies Gamma_sc

  bool phase_noise = false;
  double phase_rms = constants::two_pi / 1000.0;  // rad
  double phase_update_interval = 50e-6;          // s

  bool background_loss = false;
  double background_lifetime = 25.0;  // s

  bool resonant_probe = false;
  double probe_scatter_rate = 0.0;  // 1/s

  void validate() const;
};

struct IntegratorOptions {
  /// 0 selects default_timestep().
  double dt = 0.0;
  /// Extra time simulated after the sweep ends, before classification.
  double t_settle = 0.0;
  bool gravity = true;
  /// Trap depth follows the AOM efficiency at the instantaneous detuning.
  std::optional<AomModel> aom;
  /// Extra multiplicative depth factor versus time; empty means 1.
  std::function<double(double)> depth_modulation;
  /// Keep every n-th state in the trajectory; 0 keeps none.
  std::size_t record_stride = 0;
  /// Integration stops early once the atom is this many local beam radii
  /// away from the axis.
  double escape_radius = 3.0;
};

enum class Outcome { Bound, Escaped, BackgroundLost };

const char* to_string(Outcome o);

struct TrajectorySample {
  double time;
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;
  double well_energy;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Outcome outcome = Outcome::Bound;
  double outcome_time = 0.0;  // time of loss, or end time when bound
  double end_time = 0.0;
  AtomState final_state;
  double final_well_energy = 0.0;
  double final_effective_depth = 0.0;
  std::size_t steps = 0;
};

/// (2 pi / Omega_z) / 100.
double default_timestep(const DerivedTrap& d);
/// Largest accepted step, (2 pi / Omega_z) / 50.
double max_timestep(const DerivedTrap& d);

/// Kick-drift-kick velocity Verlet through the sweep, then `t_settle` of
/// holding, with stochastic channels between steps. Throws NumericalError on
/// a non-finite state and ConfigError on an oversized step.
Trajectory integrate(const DerivedTrap& d, const SweepProfile& p, const AtomState& s0,
                     const NoiseChannels& noise, const IntegratorOptions& opts, Rng& rng);

/// Axial position of the well bottom nearest to z for standing-wave phase
/// `phase`.
double nearest_well(const DerivedTrap& d, double z, double phase);

/// Energy in the frame of the well nearest the atom: kinetic energy relative
/// to the moving wave plus potential (including the inertial term m a z)
/// above the bottom of that well, with gravity and acceleration tilts.
/// +infinity when the acceleration leaves no well.
double well_frame_energy(const DerivedTrap& d, const AtomState& s, const SweepState& wave,
                         double depth_scale, bool gravity_on);

/// Kinetic plus potential energy in the lab frame.
double total_energy(const DerivedTrap& d, const AtomState& s, double phase, bool gravity_on,
                    double depth_scale = 1.0);

struct BoundCheck {
  bool bound;
  double well_energy;
  double effective_depth;
};

/// Bound when the well-frame energy is below the gravity-tilted depth of
/// the well at z_well and the atom sits within 1.5 w(z) of the axis.
BoundCheck is_bound(const DerivedTrap& d, const AtomState& s, double z_well, bool gravity_on,
                    double depth_scale = 1.0);

/// Poisson number of scattering events in dt at `rate`; each adds one photon
/// momentum along the optical axis (random sign) and one in a random
/// direction.
AtomState apply_recoil(const DerivedTrap& d, const AtomState& s, double rate, double dt, Rng& rng);

/// Phase offset redrawn from N(0, rms^2), added to `phase`.
double apply_phase_noise(double phase, double rms, Rng& rng);

/// rms standing-wave displacement rms / (2k) caused by phase noise `rms`.
double phase_jitter_position(const DerivedTrap& d, double rms);

/// CSV columns t,x,y,z,vx,vy,vz,E_well.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace conveyor
