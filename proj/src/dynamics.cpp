#include "conveyor/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "conveyor/analytics.hpp"
#include "conveyor/error.hpp"
#include "conveyor/field.hpp"

namespace conveyor {

using constants::pi;
using Eigen::Vector3d;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vector3d isotropic_direction(Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double cos_theta = 2.0 * uniform(rng) - 1.0;
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const double azimuth = constants::two_pi * uniform(rng);
  return {sin_theta * std::cos(azimuth), sin_theta * std::sin(azimuth), cos_theta};
}

// One absorption along the trap axis plus one spontaneous emission.
void scatter_photon(const DerivedTrap& d, Vector3d& velocity, Rng& rng) {
  const double kick = d.photon_momentum() / d.mass();
  std::bernoulli_distribution coin(0.5);
  velocity.z() += coin(rng) ? kick : -kick;
  velocity += kick * isotropic_direction(rng);
}

double gravity_potential(const DerivedTrap& d, const Vector3d& r, bool gravity_on) {
  if (!gravity_on) return 0.0;
  return d.mass() * d.config.gravity * d.config.gravity_axis.dot(r);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

void NoiseChannels::validate() const {
  if (!(phase_rms >= 0.0)) throw ConfigError("phase noise rms must be non-negative");
  if (!(phase_update_interval > 0.0)) throw ConfigError("phase update interval must be positive");
  if (!(background_lifetime > 0.0)) throw ConfigError("background lifetime must be positive");
  if (!(recoil_rate_scale >= 0.0)) throw ConfigError("recoil rate scale must be non-negative");
  if (!(probe_scatter_rate >= 0.0)) throw ConfigError("probe scattering rate must be non-negative");
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Bound: return "bound";
    case Outcome::Escaped: return "escaped";
    case Outcome::BackgroundLost: return "background_lost";
  }
  return "unknown";
}

double default_timestep(const DerivedTrap& d) { return constants::two_pi / d.freq_axial / 100.0; }

double max_timestep(const DerivedTrap& d) { return constants::two_pi / d.freq_axial / 50.0; }

double nearest_well(const DerivedTrap& d, double z, double phase) {
  const double k = d.wavevector_trap;
  return (phase + pi * std::round((k * z - phase) / pi)) / k;
}

double well_frame_energy(const DerivedTrap& d, const AtomState& s, const SweepState& wave,
                         double depth_scale, bool gravity_on) {
  const double m = d.mass();
  const double k = d.wavevector_trap;
  const double visibility = d.config.contrast;
  const double z = s.position.z();
  const double z_well = nearest_well(d, z, wave.phase);
  const double u_loc = depth_scale * local_depth(d, z_well);
  if (!(u_loc > 0.0)) return std::numeric_limits<double>::infinity();

  Vector3d relative = s.velocity;
  relative.z() -= wave.velocity;
  const double kinetic = 0.5 * m * relative.squaredNorm();
  const double pot = potential(d, s.position, wave.phase, gravity_on, depth_scale) +
                     m * wave.acceleration * (z - z_well);

  // Bottom of the axial well tilted by the inertial force.
  const double alpha = m * wave.acceleration / (visibility * u_loc * k);
  if (std::abs(alpha) >= 1.0) return std::numeric_limits<double>::infinity();
  const double x_min = -0.5 * std::asin(alpha);
  const double c = std::cos(x_min);
  double bottom = -0.5 * (1.0 - visibility) * u_loc + visibility * u_loc * (-c * c + alpha * x_min);

  // Sag of the transverse well under gravity.
  if (gravity_on && d.config.gravity > 0.0) {
    const double peak = 0.5 * (1.0 + visibility) * u_loc;
    const TiltedGaussian g =
        tilted_gaussian_extrema(peak, beam_radius(d, z_well), m * d.config.gravity);
    if (!g.has_well) return std::numeric_limits<double>::infinity();
    bottom += g.min_value + peak;
  }
  return kinetic + pot - bottom;
}

double total_energy(const DerivedTrap& d, const AtomState& s, double phase, bool gravity_on,
                    double depth_scale) {
  return 0.5 * d.mass() * s.velocity.squaredNorm() +
         potential(d, s.position, phase, gravity_on, depth_scale);
}

BoundCheck is_bound(const DerivedTrap& d, const AtomState& s, double z_well, bool gravity_on,
                    double depth_scale) {
  const SweepState wave{d.wavevector_trap * z_well, z_well, 0.0, 0.0, 0.0};
  const double energy = well_frame_energy(d, s, wave, depth_scale, gravity_on);
  const double peak = 0.5 * (1.0 + d.config.contrast) * depth_scale;
  const double u_eff = effective_depth(d, z_well, peak, gravity_on);
  const double rho = s.position.head<2>().norm();
  const bool inside = rho < 1.5 * beam_radius(d, s.position.z());
  return {energy < u_eff && inside, energy, u_eff};
}

AtomState apply_recoil(const DerivedTrap& d, const AtomState& s, double rate, double dt, Rng& rng) {
  AtomState out = s;
  if (!(rate > 0.0) || !(dt > 0.0)) return out;
  std::poisson_distribution<long> events(rate * dt);
  const long n = events(rng);
  for (long i = 0; i < n; ++i) scatter_photon(d, out.velocity, rng);
  return out;
}

double apply_phase_noise(double phase, double rms, Rng& rng) {
  if (!(rms > 0.0)) return phase;
  std::normal_distribution<double> normal(0.0, rms);
  return phase + normal(rng);
}

double phase_jitter_position(const DerivedTrap& d, double rms) {
  return rms / (2.0 * d.wavevector_trap);
}

Trajectory integrate(const DerivedTrap& d, const SweepProfile& p, const AtomState& s0,
                     const NoiseChannels& noise, const IntegratorOptions& opts, Rng& rng) {
  noise.validate();
  if (opts.aom) opts.aom->validate();
  const double dt = opts.dt > 0.0 ? opts.dt : default_timestep(d);
  if (dt > max_timestep(d) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "timestep " << dt << " s exceeds (2 pi / Omega_z) / 50 = " << max_timestep(d) << " s";
    throw ConfigError(os.str());
  }
  if (opts.t_settle < 0.0) throw ConfigError("settle time must be non-negative");
  if (!s0.position.allFinite() || !s0.velocity.allFinite())
    throw NumericalError("initial atom state is not finite");

  const double m = d.mass();
  const bool gravity_on = opts.gravity;
  const double t_end = p.total_duration() + opts.t_settle;

  std::size_t cursor = 0;
  double phase_offset = 0.0;
  auto wave_at = [&](double t) { return p.state(t, &cursor); };
  auto depth_at = [&](double t, const SweepState& wave) {
    double s = 1.0;
    if (opts.aom) s *= depth_scaling(*opts.aom, wave.detuning);
    if (opts.depth_modulation) s *= opts.depth_modulation(t);
    return s;
  };

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> unit_exponential(1.0);
  std::normal_distribution<double> phase_normal(0.0, noise.phase_rms > 0.0 ? noise.phase_rms : 1.0);

  const double inf = std::numeric_limits<double>::infinity();
  const double recoil_rate = noise.photon_recoil ? d.scatter_rate * noise.recoil_rate_scale : 0.0;
  const double probe_rate = noise.resonant_probe ? noise.probe_scatter_rate : 0.0;
  double next_recoil = recoil_rate > 0.0 ? unit_exponential(rng) / recoil_rate : inf;
  double next_probe = probe_rate > 0.0 ? unit_exponential(rng) / probe_rate : inf;
  const double loss_time =
      noise.background_loss ? unit_exponential(rng) * noise.background_lifetime : inf;
  const bool phase_noise_on = noise.phase_noise && noise.phase_rms > 0.0;
  double next_phase_update = inf;
  if (phase_noise_on) {
    phase_offset = phase_normal(rng);
    next_phase_update = noise.phase_update_interval;
  }

  Trajectory traj;
  Vector3d r = s0.position;
  Vector3d v = s0.velocity;
  double t = 0.0;

  SweepState wave = wave_at(t);
  double scale = depth_at(t, wave);
  FieldSample<double> field = evaluate_field(d, r, wave.phase + phase_offset, gravity_on, scale);

  auto record = [&]() {
    SweepState w = wave;
    w.phase += phase_offset;
    const AtomState s{r, v, s0.time + t};
    traj.samples.push_back({s0.time + t, r, v, well_frame_energy(d, s, w, scale, gravity_on)});
  };
  if (opts.record_stride > 0) record();

  Outcome outcome = Outcome::Bound;
  double outcome_time = t_end;
  std::size_t step = 0;
  while (t < t_end) {
    const double t_next = std::min(t_end, static_cast<double>(step + 1) * dt);
    const double h = t_next - t;
    v += (0.5 * h / m) * field.force;
    r += h * v;
    t = t_next;
    wave = wave_at(t);
    scale = depth_at(t, wave);
    field = evaluate_field(d, r, wave.phase + phase_offset, gravity_on, scale);
    v += (0.5 * h / m) * field.force;
    ++step;

    while (next_recoil <= t) {
      // Thinning: the scattering rate follows the local light intensity.
      const double fraction =
          std::clamp(-(field.potential - gravity_potential(d, r, gravity_on)) / d.depth, 0.0, 1.0);
      if (uniform(rng) < fraction) {
        scatter_photon(d, v, rng);
      }
      next_recoil += unit_exponential(rng) / recoil_rate;
    }
    while (next_probe <= t) {
      scatter_photon(d, v, rng);
      next_probe += unit_exponential(rng) / probe_rate;
    }
    if (next_phase_update <= t) {
      while (next_phase_update <= t) next_phase_update += noise.phase_update_interval;
      phase_offset = phase_normal(rng);
      field = evaluate_field(d, r, wave.phase + phase_offset, gravity_on, scale);
    }

    if (!r.allFinite() || !v.allFinite()) {
      std::ostringstream os;
      os << "non-finite atom state at step " << step << " (t = " << t << " s)";
      throw NumericalError(os.str());
    }
    if (opts.record_stride > 0 && step % opts.record_stride == 0) record();

    if (t >= loss_time) {
      outcome = Outcome::BackgroundLost;
      outcome_time = loss_time;
      break;
    }
    if ((step & 15u) == 0) {
      const double limit = opts.escape_radius * beam_radius(d, r.z());
      if (r.head<2>().squaredNorm() > limit * limit) {
        outcome = Outcome::Escaped;
        outcome_time = t;
        break;
      }
    }
  }

  traj.steps = step;
  traj.end_time = s0.time + t;
  traj.final_state = {r, v, s0.time + t};
  if (opts.record_stride > 0 && step % opts.record_stride != 0) record();

  SweepState final_wave = wave;
  final_wave.phase += phase_offset;
  traj.final_well_energy = well_frame_energy(d, traj.final_state, final_wave, scale, gravity_on);
  const double peak = 0.5 * (1.0 + d.config.contrast) * scale;
  traj.final_effective_depth =
      effective_depth(d, nearest_well(d, r.z(), final_wave.phase), peak, gravity_on);

  if (outcome == Outcome::Bound) {
    const bool inside = r.head<2>().norm() < 1.5 * beam_radius(d, r.z());
    if (!(traj.final_well_energy < traj.final_effective_depth && inside)) {
      outcome = Outcome::Escaped;
      outcome_time = t;
    }
  }
  traj.outcome = outcome;
  traj.outcome_time = s0.time + outcome_time;
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x,y,z,vx,vy,vz,E_well\n";
  const auto old = os.precision(12);
  for (const auto& s : traj.samples)
    os << s.time << ',' << s.position.x() << ',' << s.position.y() << ',' << s.position.z() << ','
       << s.velocity.x() << ',' << s.velocity.y() << ',' << s.velocity.z() << ',' << s.well_energy
       << '\n';
  os.precision(old);
}

}  // namespace conveyor
