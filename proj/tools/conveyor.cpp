// Command-line driver: derived trap table, sweep waveforms, single
// trajectories and Monte Carlo scans written as CSV.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conveyor/analytics.hpp"
#include "conveyor/config.hpp"
#include "conveyor/constants.hpp"
#include "conveyor/dynamics.hpp"
#include "conveyor/error.hpp"
#include "conveyor/experiments.hpp"
#include "conveyor/sweep.hpp"
#include "conveyor/trap.hpp"

namespace fs = std::filesystem;
using namespace conveyor;

namespace {

struct Global {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = kDefaultSeed;
  std::size_t trials = 200;
  unsigned workers = 0;
  double temperature_uK = -1.0;  // < 0: scan default
  bool no_gravity = false;
  std::vector<std::string> noise;
  bool quiet = false;
};

struct Loaded {
  DerivedTrap trap;
  AomModel aom;
  Metadata meta;
};

Loaded load(const Global& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  const KeyValues kv = load_key_values(g.config);
  Loaded l;
  l.trap = derive(trap_config_from(kv));
  l.aom = aom_model_from(kv);
  l.meta = describe(l.trap.config);
  l.meta.emplace_back("config_file", g.config);
  l.meta.emplace_back("seed", std::to_string(g.seed));
  l.meta.emplace_back("revision", revision());
  return l;
}

fs::path output(const Global& g, const std::string& name) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + g.out);
  return dir / name;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

NoiseChannels noise_from(const Global& g, NoiseChannels base) {
  if (g.noise.empty()) return base;
  base.photon_recoil = base.phase_noise = base.background_loss = false;
  for (const auto& n : g.noise) {
    if (n == "recoil") base.photon_recoil = true;
    else if (n == "phase") base.phase_noise = true;
    else if (n == "background") base.background_loss = true;
    else if (n == "none") {}
    else throw ConfigError("unknown noise channel '" + n + "' (recoil, phase, background, none)");
  }
  return base;
}

void apply_globals(const Global& g, ExperimentSpec& spec) {
  spec.trials = g.trials;
  spec.workers = g.workers;
  spec.seed = g.seed;
  spec.gravity = !g.no_gravity;
  if (g.temperature_uK >= 0.0) spec.temperature = g.temperature_uK * 1e-6;
  spec.noise = noise_from(g, spec.noise);
}

void report(const ScanResult& r, const fs::path& path) {
  std::cout << "wrote " << path.string() << '\n';
  std::cout << std::setw(14) << "value" << std::setw(12) << "efficiency" << std::setw(20)
            << "95% interval" << '\n';
  for (const auto& p : r.points) {
    std::ostringstream ci;
    ci << std::fixed << std::setprecision(3) << '[' << p.ci_low << ", " << p.ci_high << ']';
    std::cout << std::setw(14) << std::setprecision(5) << p.value << std::setw(12) << std::fixed
              << std::setprecision(3) << p.efficiency << std::setw(20) << ci.str() << '\n'
              << std::defaultfloat;
  }
}

ScanResult run_and_write(const Global& g, const Loaded& l, const ExperimentSpec& spec,
                         const std::string& name) {
  const ScanResult r = run_scan(l.trap, spec);
  const fs::path path = output(g, name);
  std::ofstream os = open_out(path);
  os << "# config_file = " << g.config << '\n';
  write_scan_csv(os, r);
  report(r, path);
  return r;
}

void cmd_derive(const Global& g) {
  const Loaded l = load(g);
  const DerivedTrap& d = l.trap;
  const double kb = constants::boltzmann;
  const double two_pi = constants::two_pi;
  struct Row {
    const char* name;
    double value;
    const char* unit;
  };
  const std::vector<Row> rows{
      {"U0", d.depth, "J"},
      {"U0_mK", d.depth / kb * 1e3, "mK"},
      {"detuning_eff_THz", d.detuning_eff / two_pi * 1e-12, "THz"},
      {"scatter_rate", d.scatter_rate, "1/s"},
      {"f_axial_kHz", d.freq_axial / two_pi * 1e-3, "kHz"},
      {"f_radial_kHz", d.freq_radial / two_pi * 1e-3, "kHz"},
      {"ground_axial_nm", d.gs_axial * 1e9, "nm"},
      {"ground_radial_nm", d.gs_radial * 1e9, "nm"},
      {"rayleigh_mm", d.rayleigh * 1e3, "mm"},
      {"a_max", d.accel_max, "m/s^2"},
      {"a_R", d.light_pressure_accel, "m/s^2"},
      {"recoil_energy_nK", d.recoil_energy / kb * 1e9, "nK"},
      {"doppler_temperature_uK", d.doppler_temp * 1e6, "uK"},
      {"thermal_axial_nm", thermal_localization(d, d.doppler_temp).axial * 1e9, "nm"},
      {"thermal_radial_um", thermal_localization(d, d.doppler_temp).radial * 1e6, "um"},
      {"U_eff_vanish_mm", vanish_distance_tangency(d) * 1e3, "mm"},
  };
  for (const auto& r : rows)
    std::cout << std::left << std::setw(24) << r.name << std::right << std::setw(16)
              << std::setprecision(6) << r.value << "  " << r.unit << '\n';
  const fs::path path = output(g, "derived.csv");
  std::ofstream os = open_out(path);
  write_metadata(os, l.meta);
  os << "quantity,value,unit\n" << std::setprecision(12);
  for (const auto& r : rows) os << r.name << ',' << r.value << ',' << r.unit << '\n';
  std::cout << "wrote " << path.string() << '\n';
}

struct SweepArgs {
  double distance_mm = 1.0;
  double accel = 500.0;
  int legs = 1;
  double rate = 10e6;
  double ramp_us = 0.0;
};

SweepProfile build_sweep(const SweepArgs& a, const Loaded& l) {
  const double lambda = l.trap.wavelength();
  const double d = a.distance_mm * 1e-3;
  if (a.ramp_us > 0.0) {
    if (a.legs != 1) throw ConfigError("--ramp-us supports a single leg only");
    return smooth_transport_profile(d, a.accel, a.ramp_us * 1e-6, lambda);
  }
  return shuttle_profile(d, a.accel, a.legs, lambda, l.aom.max_detuning());
}

void cmd_sweep_export(const Global& g, const SweepArgs& a) {
  const Loaded l = load(g);
  const SweepProfile p = build_sweep(a, l);
  const fs::path path = output(g, "sweep_profile.csv");
  std::ofstream os = open_out(path);
  write_metadata(os, l.meta);
  os << "# distance_mm = " << a.distance_mm << "\n# acceleration_m_s2 = " << a.accel
     << "\n# legs = " << a.legs << "\n# ramp_us = " << a.ramp_us << "\n# sample_rate_Hz = " << a.rate
     << "\n# heterodyne_cycles = " << std::setprecision(12) << cycle_count(p) << '\n';
  write_profile_csv(os, p, a.rate);
  std::cout << "duration " << p.total_duration() * 1e3 << " ms, peak detuning "
            << p.max_abs_detuning() * 1e-6 << " MHz, " << cycle_count(p) << " cycles\n"
            << "wrote " << path.string() << '\n';
}

void cmd_transport(const Global& g, const SweepArgs& a, std::size_t stride, bool use_aom,
                   double settle_ms) {
  const Loaded l = load(g);
  const SweepProfile p = build_sweep(a, l);
  ExperimentSpec spec;
  apply_globals(g, spec);
  IntegratorOptions opts;
  opts.gravity = spec.gravity;
  opts.record_stride = stride;
  opts.t_settle = settle_ms * 1e-3;
  if (use_aom) opts.aom = l.aom;
  Rng rng = make_stream(g.seed, 0);
  const AtomState s0 = sample_thermal(l.trap, spec.temperature, rng, spec.gravity);
  const Trajectory t = integrate(l.trap, p, s0, spec.noise, opts, rng);
  const fs::path path = output(g, "trajectory.csv");
  std::ofstream os = open_out(path);
  write_metadata(os, l.meta);
  os << "# distance_mm = " << a.distance_mm << "\n# acceleration_m_s2 = " << a.accel
     << "\n# legs = " << a.legs << "\n# temperature_uK = " << spec.temperature * 1e6
     << "\n# outcome = " << to_string(t.outcome) << '\n';
  write_trajectory_csv(os, t);
  std::cout << "outcome " << to_string(t.outcome) << " at t = " << t.outcome_time * 1e3
            << " ms, final z = " << t.final_state.position.z() * 1e3 << " mm, E_well/U0 = "
            << t.final_well_energy / l.trap.depth << ", " << t.steps << " steps\n"
            << "wrote " << path.string() << '\n';
}

void cmd_effective_depth(const Global& g, double z_max_mm, std::size_t samples) {
  const Loaded l = load(g);
  const EffectiveDepthCurve c = effective_depth_curve(l.trap, z_max_mm * 1e-3, samples);
  const fs::path path = output(g, "effective_depth.csv");
  std::ofstream os = open_out(path);
  write_metadata(os, l.meta);
  os << "# z_vanish_mm = " << std::setprecision(10) << c.z_vanish * 1e3
     << "\n# z_vanish_tangency_mm = " << vanish_distance_tangency(l.trap) * 1e3 << '\n';
  write_effective_depth_csv(os, c, l.trap);
  std::cout << "U_eff vanishes at " << c.z_vanish * 1e3 << " mm (tangency "
            << vanish_distance_tangency(l.trap) * 1e3 << " mm)\nwrote " << path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-atom transport in a moving standing-wave dipole trap"};
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--config", g.config, "Key-value trap configuration file");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--trials", g.trials, "Trials per scan point")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads (0: all cores)")->capture_default_str();
  app.add_option("--temperature-uK", g.temperature_uK, "Initial temperature in microkelvin");
  app.add_flag("--no-gravity", g.no_gravity, "Switch gravity off");
  app.add_option("--noise", g.noise, "Noise channels: recoil, phase, background, none")
      ->delimiter(',');
  app.add_flag("-q,--quiet", g.quiet, "Suppress warnings");

  auto* derive_cmd = app.add_subcommand("derive", "Print derived trap quantities");

  SweepArgs sweep;
  auto add_sweep = [&](CLI::App* c) {
    c->add_option("--distance-mm", sweep.distance_mm, "Transport distance")->capture_default_str();
    c->add_option("--accel", sweep.accel, "Acceleration in m/s^2")->capture_default_str();
    c->add_option("--legs", sweep.legs, "Number of shuttle legs")->capture_default_str();
    c->add_option("--ramp-us", sweep.ramp_us, "Raised-cosine acceleration edges (0: abrupt)");
  };
  auto* sweep_cmd = app.add_subcommand("sweep-export", "Write the detuning waveform");
  add_sweep(sweep_cmd);
  sweep_cmd->add_option("--rate", sweep.rate, "Sample rate in Hz")->capture_default_str();

  std::size_t stride = 100;
  bool traj_aom = false;
  double settle_ms = 1.0;
  auto* transport_cmd = app.add_subcommand("transport", "Integrate one trajectory");
  add_sweep(transport_cmd);
  transport_cmd->add_option("--record-stride", stride, "Keep every n-th step")->capture_default_str();
  transport_cmd->add_flag("--aom", traj_aom, "Scale depth with the AOM efficiency");
  transport_cmd->add_option("--settle-ms", settle_ms, "Hold after the sweep")->capture_default_str();

  std::string values;
  auto* dist_cmd = app.add_subcommand("scan-distance", "Efficiency versus transport distance");
  std::string protocol = "two-way";
  bool detect = false;
  double dist_accel = 500.0;
  dist_cmd->add_option("--values", values, "Distances in m, start:stop:count or a,b,c");
  dist_cmd->add_option("--protocol", protocol, "one-way or two-way")->capture_default_str();
  dist_cmd->add_option("--accel", dist_accel, "Acceleration in m/s^2")->capture_default_str();
  dist_cmd->add_flag("--detection", detect, "Require resonant detection at the destination");

  auto* accel_cmd = app.add_subcommand("scan-acceleration", "Efficiency versus acceleration");
  bool no_aom = false;
  double accel_dist_mm = 1.0;
  accel_cmd->add_option("--values", values, "Accelerations in m/s^2, start:stop:count[:log]");
  accel_cmd->add_option("--distance-mm", accel_dist_mm, "Transport distance")->capture_default_str();
  accel_cmd->add_flag("--no-aom", no_aom, "Constant depth during the sweep");

  auto* shuttle_cmd = app.add_subcommand("shuttle", "Efficiency versus number of 1 mm legs");
  shuttle_cmd->add_option("--values", values, "Leg counts");

  auto* lower_cmd = app.add_subcommand("lowering", "Survival after lowering the trap depth");
  double ramp_ms = 30.0, hold_ms = 10.0, energy_fraction = -1.0;
  std::string convention = "axial";
  lower_cmd->add_option("--values", values, "Final depth fractions of U0");
  lower_cmd->add_option("--ramp-ms", ramp_ms, "Linear ramp duration")->capture_default_str();
  lower_cmd->add_option("--hold-ms", hold_ms, "Hold at the final depth")->capture_default_str();
  lower_cmd->add_option("--energy-fraction", energy_fraction,
                        "Set the temperature from a thermal energy in units of U0");
  lower_cmd->add_option("--convention", convention, "temperature, axial or total")
      ->capture_default_str();

  auto* depth_cmd = app.add_subcommand("effective-depth", "Gravity-limited depth along the axis");
  double z_max_mm = 30.0;
  std::size_t samples = 601;
  depth_cmd->add_option("--z-max-mm", z_max_mm, "Largest distance")->capture_default_str();
  depth_cmd->add_option("--samples", samples, "Number of samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  set_warnings_enabled(!g.quiet);

  try {
    if (*derive_cmd) {
      cmd_derive(g);
    } else if (*sweep_cmd) {
      cmd_sweep_export(g, sweep);
    } else if (*transport_cmd) {
      cmd_transport(g, sweep, stride, traj_aom, settle_ms);
    } else if (*depth_cmd) {
      cmd_effective_depth(g, z_max_mm, samples);
    } else {
      const Loaded l = load(g);
      ExperimentSpec spec;
      std::string name;
      if (*dist_cmd) {
        spec = ExperimentSpec::distance_scan(parse_values(values.empty() ? "1e-3:15e-3:15" : values));
        spec.acceleration = dist_accel;
        if (protocol == "one-way") spec.protocol = Protocol::OneWay;
        else if (protocol != "two-way") throw ConfigError("--protocol must be one-way or two-way");
        if (detect) spec.detection = DetectionModel::calibrated(l.trap);
        name = "distance_scan.csv";
      } else if (*accel_cmd) {
        spec = ExperimentSpec::acceleration_scan(
            parse_values(values.empty() ? "1e2:2e5:16:log" : values));
        spec.distance = accel_dist_mm * 1e-3;
        spec.aom = l.aom;
        if (no_aom) spec.aom.reset();
        spec.detection = DetectionModel::calibrated(l.trap);
        name = "acceleration_scan.csv";
      } else if (*shuttle_cmd) {
        spec = ExperimentSpec::shuttle_scan(parse_values(values.empty() ? "0:30:7" : values));
        name = "shuttle_scan.csv";
      } else if (*lower_cmd) {
        spec = ExperimentSpec::lowering_scan(
            parse_values(values.empty() ? "1,0.3,0.1,0.05,0.03,0.02,0.01" : values));
        spec.ramp_time = ramp_ms * 1e-3;
        spec.hold_time = hold_ms * 1e-3;
        if (energy_fraction >= 0.0) {
          ThermalConvention c = ThermalConvention::AxialEnergy;
          if (convention == "temperature") c = ThermalConvention::Temperature;
          else if (convention == "total") c = ThermalConvention::TotalEnergy;
          else if (convention != "axial")
            throw ConfigError("--convention must be temperature, axial or total");
          if (g.temperature_uK >= 0.0)
            throw ConfigError("give either --temperature-uK or --energy-fraction");
          spec.temperature = temperature_for_energy(l.trap, energy_fraction, c);
        }
        name = "lowering_scan.csv";
      }
      apply_globals(g, spec);
      run_and_write(g, l, spec, name);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ConstraintError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
