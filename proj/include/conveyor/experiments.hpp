#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conveyor/analytics.hpp"
#include "conveyor/config.hpp"
#include "conveyor/dynamics.hpp"
#include "conveyor/sweep.hpp"
#include "conveyor/trap.hpp"

namespace conveyor {

/// Master seed used when none is given. Fixed so that runs reproduce.
inline constexpr std::uint64_t kDefaultSeed = 424242;

enum class ScanKind { Distance, Acceleration, Shuttle, Lowering };
enum class Protocol { OneWay, TwoWay };

/// How an energy quoted as a fraction of U0 maps to a temperature:
/// Temperature takes kB T itself, AxialEnergy sets the mean axial energy kB T,
/// TotalEnergy sets the mean 3D energy 3 kB T.
enum class ThermalConvention { Temperature, AxialEnergy, TotalEnergy };

const char* to_string(ScanKind k);
const char* to_string(Protocol p);
const char* to_string(ThermalConvention c);

/// Temperature whose thermal energy equals `fraction` U0 under `convention`.
double temperature_for_energy(const DerivedTrap& d, double fraction, ThermalConvention convention);

struct ExperimentSpec {
  ScanKind kind = ScanKind::Distance;
  /// Distances (m), accelerations (m/s^2), leg counts, or depth fractions.
  std::vector<double> values;
  std::size_t trials = 200;
  double temperature = 125e-6;  // K
  bool gravity = true;
  NoiseChannels noise = [] {
    NoiseChannels n;
    n.photon_recoil = true;
    return n;
  }();
  std::uint64_t seed = kDefaultSeed;
  /// Simulated time after the sweep before survival is classified.
  double settle_time = 1e-3;
  /// 0 uses std::thread::hardware_concurrency().
  unsigned workers = 0;
  double timestep = 0.0;

  Protocol protocol = Protocol::TwoWay;
  /// Transport distance for acceleration and shuttle scans, m.
  double distance = 1e-3;
  /// Acceleration for distance and shuttle scans, m/s^2.
  double acceleration = 500.0;
  /// Raised-cosine switching time of each acceleration change; 0 switches
  /// abruptly.
  double edge_time = 0.0;
  /// Depth follows the AOM efficiency during the sweep.
  std::optional<AomModel> aom;
  /// Success additionally requires resonant detection at the destination.
  std::optional<DetectionModel> detection;
  /// A transported atom counts only if it ends within this distance of the
  /// target position.
  double capture_radius = 40e-6;

  /// Lowering scan: linear ramp from U0 to the fraction, then a hold.
  double ramp_time = 30e-3;
  double hold_time = 10e-3;

  /// Throws ConfigError on a violated invariant.
  void validate() const;

  static ExperimentSpec distance_scan(std::vector<double> distances);
  static ExperimentSpec acceleration_scan(std::vector<double> accelerations);
  static ExperimentSpec shuttle_scan(std::vector<double> legs);
  static ExperimentSpec lowering_scan(std::vector<double> fractions);
};

struct ScanPoint {
  double value = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  /// Trials ending bound at the target, before detection.
  std::size_t transported = 0;
  double efficiency = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double transport_efficiency = 0.0;
  /// Mean well-frame energy of the atoms still bound, over U0; NaN if none.
  double mean_final_energy_over_U0 = 0.0;
};

struct ScanResult {
  ScanKind kind = ScanKind::Distance;
  std::vector<ScanPoint> points;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string revision;
  /// Resolved trap, AOM and experiment settings.
  Metadata metadata;
};

/// Per-axis Gaussian draw from the harmonic approximation around the
/// (gravity-sagged) well bottom at z = 0, rejecting states whose well-frame
/// energy reaches 0.8 U0. T = 0 returns the atom at rest at the bottom.
AtomState sample_thermal(const DerivedTrap& d, double temperature, Rng& rng, bool gravity_on = true);

/// One trial of `spec` at scan value `value`, drawing from `rng`.
struct TrialOutcome {
  bool transported = false;
  bool success = false;
  double final_energy = 0.0;  // well-frame, J
  Trajectory trajectory;
};
TrialOutcome run_trial(const DerivedTrap& d, const ExperimentSpec& spec, double value, Rng& rng);

/// Runs every scan value `spec.trials` times. Trajectory (i, j) uses stream
/// make_stream(seed, i << 32 | j), so results do not depend on `workers`.
ScanResult run_scan(const DerivedTrap& d, const ExperimentSpec& spec);

ScanResult run_distance_scan(const DerivedTrap& d, ExperimentSpec spec);
ScanResult run_acceleration_scan(const DerivedTrap& d, ExperimentSpec spec);
ScanResult run_shuttle_scan(const DerivedTrap& d, ExperimentSpec spec);
ScanResult run_lowering_scan(const DerivedTrap& d, ExperimentSpec spec);

/// 95% Wilson score interval.
std::pair<double, double> confidence_interval(std::size_t successes, std::size_t trials);

/// Metadata comment lines, then the header
/// scan_value,efficiency,ci_low,ci_high,trials,mean_final_energy_over_U0.
void write_scan_csv(std::ostream& os, const ScanResult& result);

}  // namespace conveyor
