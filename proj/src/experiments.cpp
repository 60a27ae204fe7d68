#include "conveyor/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "conveyor/constants.hpp"
#include "conveyor/error.hpp"

namespace conveyor {

using Eigen::Vector3d;

namespace {

constexpr double kWilsonZ = 1.959964;
constexpr double kRejectFraction = 0.8;

std::string format(double value) {
  std::ostringstream os;
  os << std::setprecision(12) << value;
  return os.str();
}

int leg_count(double value) {
  const double n = std::round(value);
  if (std::abs(value - n) > 1e-9 || n < 0.0)
    throw ConfigError("shuttle leg counts must be non-negative integers, got " + format(value));
  return static_cast<int>(n);
}

// Bottom of the static well at z = 0, sagged by gravity.
Vector3d well_bottom(const DerivedTrap& d, bool gravity_on) {
  Vector3d r = Vector3d::Zero();
  if (!gravity_on || d.config.gravity == 0.0) return r;
  const Vector3d g = d.config.gravity * d.config.gravity_axis;
  const Vector3d radial(g.x(), g.y(), 0.0);
  const double weight = d.mass() * radial.norm();
  if (weight > 0.0) {
    const double peak = 0.5 * (1.0 + d.config.contrast) * d.depth;
    const TiltedGaussian t = tilted_gaussian_extrema(peak, d.waist(), weight);
    if (!t.has_well) throw ConstraintError("gravity exceeds the transverse trapping force");
    // min_position is measured along the upward direction (negative: sag).
    r += t.min_position * radial.normalized();
  }
  if (g.z() != 0.0) {
    const double alpha = d.mass() * g.z() / (d.config.contrast * d.depth * d.wavevector_trap);
    if (std::abs(alpha) >= 1.0) throw ConstraintError("gravity exceeds the axial trapping force");
    r.z() = -0.5 * std::asin(alpha) / d.wavevector_trap;
  }
  return r;
}

SweepState wave_at_rest() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }

// `legs` transports of `distance` with alternating direction.
SweepProfile legs_profile(const ExperimentSpec& spec, double distance, double accel, int legs,
                          double lambda) {
  std::optional<double> max_detuning;
  if (spec.aom) max_detuning = spec.aom->max_detuning();
  if (legs == 0) return SweepProfile::hold(0.0, lambda);
  if (spec.edge_time == 0.0) return shuttle_profile(distance, accel, legs, lambda, max_detuning);
  const SweepProfile out = smooth_transport_profile(distance, accel, spec.edge_time, lambda);
  const SweepProfile back = smooth_transport_profile(-distance, accel, spec.edge_time, lambda);
  if (max_detuning && out.max_abs_detuning() > *max_detuning)
    throw ConstraintError("sweep needs more detuning than the AOMs provide");
  SweepProfile p = out;
  for (int leg = 1; leg < legs; ++leg) p = p.then(leg % 2 == 0 ? out : back);
  return p;
}

}  // namespace

const char* to_string(ScanKind k) {
  switch (k) {
    case ScanKind::Distance: return "distance";
    case ScanKind::Acceleration: return "acceleration";
    case ScanKind::Shuttle: return "shuttle";
    case ScanKind::Lowering: return "lowering";
  }
  return "unknown";
}

const char* to_string(Protocol p) { return p == Protocol::OneWay ? "one_way" : "two_way"; }

const char* to_string(ThermalConvention c) {
  switch (c) {
    case ThermalConvention::Temperature: return "temperature";
    case ThermalConvention::AxialEnergy: return "axial_energy";
    case ThermalConvention::TotalEnergy: return "total_energy";
  }
  return "unknown";
}

double temperature_for_energy(const DerivedTrap& d, double fraction, ThermalConvention convention) {
  if (!(fraction >= 0.0)) throw ConfigError("energy fraction must be non-negative");
  const double kt = fraction * d.depth;
  const double per_kelvin = constants::boltzmann;
  switch (convention) {
    case ThermalConvention::Temperature:
    case ThermalConvention::AxialEnergy: return kt / per_kelvin;
    case ThermalConvention::TotalEnergy: return kt / (3.0 * per_kelvin);
  }
  return kt / per_kelvin;
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (values.empty()) throw ConfigError("scan values must not be empty");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  if (!(settle_time >= 0.0)) throw ConfigError("settle time must be non-negative");
  if (!(capture_radius > 0.0)) throw ConfigError("capture radius must be positive");
  if (!(timestep >= 0.0)) throw ConfigError("timestep must be non-negative");
  if (!(edge_time >= 0.0)) throw ConfigError("edge time must be non-negative");
  noise.validate();
  if (aom) aom->validate();
  if (detection) detection->validate();
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("scan values must be finite");
    switch (kind) {
      case ScanKind::Distance:
        if (v == 0.0) throw ConfigError("transport distance must be non-zero");
        if (!(acceleration > 0.0)) throw ConfigError("acceleration must be positive");
        break;
      case ScanKind::Acceleration:
        if (!(v > 0.0)) throw ConfigError("accelerations must be positive");
        if (distance == 0.0) throw ConfigError("transport distance must be non-zero");
        break;
      case ScanKind::Shuttle:
        leg_count(v);
        if (!(acceleration > 0.0)) throw ConfigError("acceleration must be positive");
        break;
      case ScanKind::Lowering:
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError("depth fractions must lie in (0, 1]");
        if (!(ramp_time > 0.0)) throw ConfigError("ramp time must be positive");
        if (!(hold_time >= 0.0)) throw ConfigError("hold time must be non-negative");
        break;
    }
  }
}

ExperimentSpec ExperimentSpec::distance_scan(std::vector<double> distances) {
  ExperimentSpec s;
  s.kind = ScanKind::Distance;
  s.values = std::move(distances);
  s.acceleration = 500.0;
  s.protocol = Protocol::TwoWay;
  return s;
}

ExperimentSpec ExperimentSpec::acceleration_scan(std::vector<double> accelerations) {
  ExperimentSpec s;
  s.kind = ScanKind::Acceleration;
  s.values = std::move(accelerations);
  s.distance = 1e-3;
  s.protocol = Protocol::OneWay;
  s.aom = AomModel{};
  return s;
}

ExperimentSpec ExperimentSpec::shuttle_scan(std::vector<double> legs) {
  ExperimentSpec s;
  s.kind = ScanKind::Shuttle;
  s.values = std::move(legs);
  s.distance = 1e-3;
  s.acceleration = 5000.0;
  return s;
}

ExperimentSpec ExperimentSpec::lowering_scan(std::vector<double> fractions) {
  ExperimentSpec s;
  s.kind = ScanKind::Lowering;
  s.values = std::move(fractions);
  return s;
}

AtomState sample_thermal(const DerivedTrap& d, double temperature, Rng& rng, bool gravity_on) {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be non-negative");
  AtomState s;
  s.position = well_bottom(d, gravity_on);
  if (temperature == 0.0) return s;

  const ThermalWidths widths = thermal_localization(d, temperature);
  const double sigma_v = std::sqrt(constants::boltzmann * temperature / d.mass());
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector3d center = s.position;
  const double limit = kRejectFraction * d.depth;
  for (;;) {
    s.position = center + Vector3d(widths.radial * normal(rng), widths.radial * normal(rng),
                                   widths.axial * normal(rng));
    s.velocity = sigma_v * Vector3d(normal(rng), normal(rng), normal(rng));
    if (well_frame_energy(d, s, wave_at_rest(), 1.0, gravity_on) < limit) return s;
  }
}

TrialOutcome run_trial(const DerivedTrap& d, const ExperimentSpec& spec, double value, Rng& rng) {
  const double lambda = d.wavelength();

  IntegratorOptions opts;
  opts.dt = spec.timestep;
  opts.gravity = spec.gravity;
  opts.t_settle = spec.settle_time;
  opts.aom = spec.aom;

  SweepProfile profile;
  double target = 0.0;
  switch (spec.kind) {
    case ScanKind::Distance:
    case ScanKind::Acceleration: {
      const double dist = spec.kind == ScanKind::Distance ? value : spec.distance;
      const double accel = spec.kind == ScanKind::Distance ? spec.acceleration : value;
      const int legs = spec.protocol == Protocol::TwoWay ? 2 : 1;
      profile = legs_profile(spec, dist, accel, legs, lambda);
      target = legs == 2 ? 0.0 : dist;
      break;
    }
    case ScanKind::Shuttle: {
      const int legs = leg_count(value);
      profile = legs_profile(spec, spec.distance, spec.acceleration, legs, lambda);
      target = legs % 2 == 0 ? 0.0 : spec.distance;
      break;
    }
    case ScanKind::Lowering: {
      profile = SweepProfile::hold(spec.ramp_time + spec.hold_time, lambda);
      const double ramp = spec.ramp_time;
      opts.depth_modulation = [ramp, value](double t) {
        return 1.0 - (1.0 - value) * std::min(t / ramp, 1.0);
      };
      opts.t_settle = 0.0;
      break;
    }
  }

  TrialOutcome out;
  const AtomState s0 = sample_thermal(d, spec.temperature, rng, spec.gravity);
  out.trajectory = integrate(d, profile, s0, spec.noise, opts, rng);
  const Trajectory& traj = out.trajectory;
  const Vector3d& r = traj.final_state.position;
  out.final_energy = traj.final_well_energy;

  if (spec.kind == ScanKind::Lowering) {
    // Survival means the atom is still held by the beam; hopping between
    // wells along the axis keeps it trapped.
    out.transported = traj.outcome != Outcome::BackgroundLost &&
                      r.head<2>().norm() < 1.5 * beam_radius(d, r.z());
  } else {
    out.transported = traj.outcome == Outcome::Bound &&
                      std::abs(r.z() - target) < spec.capture_radius;
  }
  out.success = out.transported;
  if (out.success && spec.detection) {
    const double p = detection_probability(*spec.detection, d, target).probability;
    std::bernoulli_distribution detected(p);
    out.success = detected(rng);
  }
  return out;
}

std::pair<double, double> confidence_interval(std::size_t successes, std::size_t trials) {
  if (trials < 1) throw ConfigError("confidence interval needs at least one trial");
  if (successes > trials) throw ConfigError("successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = kWilsonZ * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  double low = std::max(0.0, center - half);
  double high = std::min(1.0, center + half);
  if (successes == 0) low = 0.0;
  if (successes == trials) high = 1.0;
  return {std::min(low, p), std::max(high, p)};
}

namespace {

Metadata experiment_metadata(const DerivedTrap& d, const ExperimentSpec& spec) {
  Metadata m = describe(d.config);
  if (spec.aom) {
    const Metadata a = describe(*spec.aom);
    m.insert(m.end(), a.begin(), a.end());
  } else {
    m.emplace_back("aom_model", "off");
  }
  m.emplace_back("scan", to_string(spec.kind));
  std::string values;
  for (double v : spec.values) values += (values.empty() ? "" : " ") + format(v);
  m.emplace_back("scan_values", values);
  m.emplace_back("trials", std::to_string(spec.trials));
  m.emplace_back("temperature_uK", format(spec.temperature * 1e6));
  m.emplace_back("gravity", spec.gravity ? "on" : "off");
  m.emplace_back("noise_recoil", spec.noise.photon_recoil ? format(spec.noise.recoil_rate_scale) : "off");
  m.emplace_back("noise_phase", spec.noise.phase_noise
                                    ? format(spec.noise.phase_rms) + " rad every " +
                                          format(spec.noise.phase_update_interval) + " s"
                                    : "off");
  m.emplace_back("noise_background",
                 spec.noise.background_loss ? format(spec.noise.background_lifetime) + " s" : "off");
  m.emplace_back("noise_probe",
                 spec.noise.resonant_probe ? format(spec.noise.probe_scatter_rate) + " 1/s" : "off");
  m.emplace_back("settle_time_s", format(spec.settle_time));
  m.emplace_back("timestep_s", format(spec.timestep > 0.0 ? spec.timestep : default_timestep(d)));
  m.emplace_back("capture_radius_um", format(spec.capture_radius * 1e6));
  m.emplace_back("edge_time_s", format(spec.edge_time));
  switch (spec.kind) {
    case ScanKind::Distance:
      m.emplace_back("protocol", to_string(spec.protocol));
      m.emplace_back("acceleration_m_s2", format(spec.acceleration));
      break;
    case ScanKind::Acceleration:
      m.emplace_back("protocol", to_string(spec.protocol));
      m.emplace_back("distance_m", format(spec.distance));
      break;
    case ScanKind::Shuttle:
      m.emplace_back("distance_m", format(spec.distance));
      m.emplace_back("acceleration_m_s2", format(spec.acceleration));
      break;
    case ScanKind::Lowering:
      m.emplace_back("ramp_time_s", format(spec.ramp_time));
      m.emplace_back("hold_time_s", format(spec.hold_time));
      break;
  }
  if (spec.detection) {
    m.emplace_back("detection_efficiency", format(spec.detection->efficiency));
    m.emplace_back("detection_background", format(spec.detection->background));
    m.emplace_back("detection_threshold", std::to_string(spec.detection->threshold));
  } else {
    m.emplace_back("detection", "off");
  }
  m.emplace_back("seed", std::to_string(spec.seed));
  return m;
}

}  // namespace

ScanResult run_scan(const DerivedTrap& d, const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t points = spec.values.size();
  const std::size_t total = points * spec.trials;

  struct Slot {
    bool transported = false;
    bool success = false;
    double energy = 0.0;
  };
  std::vector<Slot> slots(total);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total || failed.load()) return;
      const std::size_t i = job / spec.trials;
      const std::size_t j = job % spec.trials;
      try {
        Rng rng = make_stream(spec.seed, (static_cast<std::uint64_t>(i) << 32) | j);
        const TrialOutcome t = run_trial(d, spec, spec.values[i], rng);
        slots[job] = {t.transported, t.success, t.final_energy};
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  unsigned workers = spec.workers ? spec.workers : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(total)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  ScanResult result;
  result.kind = spec.kind;
  result.seed = spec.seed;
  result.revision = revision();
  result.metadata = experiment_metadata(d, spec);
  result.config_hash = config_hash(result.metadata);
  for (std::size_t i = 0; i < points; ++i) {
    ScanPoint pt;
    pt.value = spec.values[i];
    pt.trials = spec.trials;
    double energy_sum = 0.0;
    std::size_t energy_count = 0;
    for (std::size_t j = 0; j < spec.trials; ++j) {
      const Slot& s = slots[i * spec.trials + j];
      pt.transported += s.transported;
      pt.successes += s.success;
      if (s.transported && std::isfinite(s.energy)) {
        energy_sum += s.energy;
        ++energy_count;
      }
    }
    const double n = static_cast<double>(pt.trials);
    pt.efficiency = static_cast<double>(pt.successes) / n;
    pt.transport_efficiency = static_cast<double>(pt.transported) / n;
    std::tie(pt.ci_low, pt.ci_high) = confidence_interval(pt.successes, pt.trials);
    pt.mean_final_energy_over_U0 = energy_count
                                       ? energy_sum / static_cast<double>(energy_count) / d.depth
                                       : std::numeric_limits<double>::quiet_NaN();
    result.points.push_back(pt);
  }
  return result;
}

ScanResult run_distance_scan(const DerivedTrap& d, ExperimentSpec spec) {
  spec.kind = ScanKind::Distance;
  return run_scan(d, spec);
}

ScanResult run_acceleration_scan(const DerivedTrap& d, ExperimentSpec spec) {
  spec.kind = ScanKind::Acceleration;
  return run_scan(d, spec);
}

ScanResult run_shuttle_scan(const DerivedTrap& d, ExperimentSpec spec) {
  spec.kind = ScanKind::Shuttle;
  return run_scan(d, spec);
}

ScanResult run_lowering_scan(const DerivedTrap& d, ExperimentSpec spec) {
  spec.kind = ScanKind::Lowering;
  return run_scan(d, spec);
}

void write_scan_csv(std::ostream& os, const ScanResult& result) {
  write_metadata(os, result.metadata);
  os << "# revision = " << result.revision << '\n';
  os << "# config_hash = " << std::hex << std::setw(16) << std::setfill('0') << result.config_hash
     << std::dec << std::setfill(' ') << '\n';
  os << "scan_value,efficiency,ci_low,ci_high,trials,mean_final_energy_over_U0\n";
  const auto old = os.precision(10);
  for (const auto& p : result.points)
    os << p.value << ',' << p.efficiency << ',' << p.ci_low << ',' << p.ci_high << ',' << p.trials
       << ',' << p.mean_final_energy_over_U0 << '\n';
  os.precision(old);
}

}  // namespace conveyor
