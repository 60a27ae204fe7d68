// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            all criteria
//   acceptance 5 7        selected criteria

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "conveyor/analytics.hpp"
#include "conveyor/constants.hpp"
#include "conveyor/dynamics.hpp"
#include "conveyor/experiments.hpp"
#include "conveyor/field.hpp"
#include "conveyor/sweep.hpp"
#include "conveyor/trap.hpp"

using namespace conveyor;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  // Records one check; returns it for chaining.
  bool check(bool ok, const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << what << (ok ? "" : " [x]");
    pass = pass && ok;
    return ok;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

void relative(Verdict& v, const char* name, double value, double target, double rel, const char* unit) {
  v.check(within(value, target, rel),
          std::string(name) + fmt(" %.4g", value) + " " + unit + fmt(" vs %.4g +-%.0f%%", target, rel * 100));
}

DerivedTrap plain() { return derive(TrapConfig{}); }

DerivedTrap override_z0() {
  TrapConfig cfg;
  cfg.rayleigh_override = 3e-3;
  return derive(cfg);
}

void derived_quantities(Verdict& v) {
  const DerivedTrap d = plain();
  relative(v, "U0", d.depth_mK(), 1.3, 0.05, "mK");
  relative(v, "f_z", d.freq_axial / constants::two_pi * 1e-3, 340, 0.05, "kHz");
  relative(v, "f_rad", d.freq_radial / constants::two_pi * 1e-3, 2.6, 0.05, "kHz");
  relative(v, "Gamma_sc", d.scatter_rate, 15, 0.15, "1/s");
  relative(v, "dz0", d.gs_axial * 1e9, 11, 0.05, "nm");
  relative(v, "drho0", d.gs_radial * 1e9, 120, 0.05, "nm");
  relative(v, "a_max", d.accel_max, 4.8e5, 0.05, "m/s^2");
  relative(v, "a_R", d.light_pressure_accel, 6e4, 0.10, "m/s^2");
}

void thermal_localization_check(Verdict& v) {
  const ThermalWidths w = thermal_localization(plain(), 125e-6);
  relative(v, "axial", w.axial * 1e9, 43, 0.05, "nm");
  relative(v, "radial", w.radial * 1e6, 5.6, 0.05, "um");
}

void gravity_bound(Verdict& v) {
  const DerivedTrap d = override_z0();
  const EffectiveDepthCurve c = effective_depth_curve(d, 30e-3, 3001);
  const double tangency = vanish_distance_tangency(d);
  v.check(std::abs(c.z_vanish - 21e-3) <= 1e-3, fmt("zero crossing %.3f mm vs 21 +-1", c.z_vanish * 1e3));
  v.check(std::abs(c.z_vanish - tangency) <= 0.1e-3,
          fmt("tangency %.3f mm, |diff| %.4f mm <= 0.1", tangency * 1e3, std::abs(c.z_vanish - tangency) * 1e3));
}

void jump_heating(Verdict& v) {
  const DerivedTrap d = override_z0();
  const double cold = jump_loss_threshold(d, 0.0) / d.accel_max;
  const double warm = jump_loss_threshold(d, 0.15 * d.depth) / d.accel_max;
  v.check(std::abs(cold - 0.42) <= 0.05, fmt("onset E0=0 at %.3f a_max vs 0.42 +-0.05", cold));
  v.check(std::abs(warm - 0.24) <= 0.05, fmt("onset E0=0.15U0 at %.3f a_max vs 0.24 +-0.05", warm));
  double worst = 0.0;
  for (double alpha = 0.01; alpha <= 0.1 + 1e-12; alpha += 0.01) {
    const double e = worst_case_jump_energy(d, alpha * d.accel_max, 0.0);
    worst = std::max(worst, std::abs(e / (4.0 * d.depth * alpha * alpha) - 1.0));
  }
  v.check(worst <= 0.25, fmt("small-a energy vs 4U0 alpha^2: worst deviation %.1f%%", worst * 100));
}

void acceleration_scan(Verdict& v) {
  const DerivedTrap d = override_z0();
  const double onset = 0.12 * d.accel_max;
  std::vector<double> values{1e2, 1e3, 1e4, 3e4, 5e4, 7e4, 1.5 * onset};
  ExperimentSpec spec = ExperimentSpec::acceleration_scan(values);
  spec.trials = 200;
  const ScanResult r = run_acceleration_scan(d, spec);
  double lowest = 1.0;
  std::ostringstream row;
  for (std::size_t i = 0; i + 1 < r.points.size(); ++i) {
    lowest = std::min(lowest, r.points[i].efficiency);
    row << (i ? " " : "") << fmt("%.3g:", r.points[i].value) << fmt("%.3f", r.points[i].efficiency);
  }
  v.check(lowest > 0.9, "efficiency " + row.str() + fmt(" (min %.3f > 0.9)", lowest));
  const double high = r.points.back().efficiency;
  v.check(high < 0.5, fmt("at 1.5 x 0.12 a_max = %.3g m/s^2: %.3f < 0.5", r.points.back().value, high));
}

void distance_scan(Verdict& v) {
  const DerivedTrap d = override_z0();
  ExperimentSpec two = ExperimentSpec::distance_scan({10e-3, 15e-3});
  two.trials = 200;
  const ScanResult r = run_distance_scan(d, two);
  const double e10 = r.points[0].efficiency, e15 = r.points[1].efficiency;
  v.check(e10 >= 0.8, fmt("two-way 10 mm %.3f >= 0.8", e10));
  v.check(e15 <= 0.3, fmt("two-way 15 mm %.3f <= 0.3", e15));

  ExperimentSpec one = ExperimentSpec::distance_scan({6e-3, 9e-3, 12e-3});
  one.protocol = Protocol::OneWay;
  one.detection = DetectionModel::calibrated(d);
  one.trials = 200;
  const ScanResult o = run_distance_scan(d, one);
  for (const ScanPoint& p : o.points)
    v.check(p.efficiency < p.transport_efficiency,
            fmt("one-way %.0f mm detected %.3f < transported %.3f", p.value * 1e3, p.efficiency,
                p.transport_efficiency));
}

void lowering(Verdict& v) {
  const DerivedTrap d = override_z0();
  ExperimentSpec spec = ExperimentSpec::lowering_scan({0.03, 0.01});
  spec.temperature = temperature_for_energy(d, 0.15, ThermalConvention::AxialEnergy);
  spec.trials = 200;
  const ScanResult r = run_lowering_scan(d, spec);
  const double s3 = r.points[0].efficiency, s1 = r.points[1].efficiency;
  v.check(std::abs(s3 - 0.8) <= 0.15, fmt("0.03 U0 survival %.3f vs 0.8 +-0.15", s3));
  v.check(std::abs(s1 - 0.1) <= 0.15, fmt("0.01 U0 survival %.3f vs 0.1 +-0.15", s1));
}

void properties(Verdict& v) {
  const DerivedTrap d = override_z0();

  {
    const double dt = default_timestep(d);
    IntegratorOptions opts;
    opts.gravity = false;
    opts.record_stride = 1000;
    AtomState s0;
    s0.position = {1e-6, -0.5e-6, 20e-9};
    Rng rng = make_stream(1, 0);
    const Trajectory t = integrate(d, SweepProfile::hold(1e6 * dt, d.wavelength()), s0, NoiseChannels{}, opts, rng);
    const std::size_t n = t.samples.size();
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      head += t.samples[i].well_energy / 100;
      tail += t.samples[n - 100 + i].well_energy / 100;
    }
    const double drift = std::abs(tail - head) / d.depth;
    v.check(t.steps >= 1'000'000 && drift < 1e-4, fmt("energy drift %.2e U0 over %.0f steps", drift, double(t.steps)));
  }

  {
    double worst = 0.0;
    Rng rng = make_stream(2, 0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const Vector3<long double> r(20e-6L * u(rng), 20e-6L * u(rng), 5e-3L * u(rng));
      const double phase = 3.0 * u(rng);
      const auto f = force(d, r, phase, true);
      const long double h = 1e-10L;
      for (int a = 0; a < 3; ++a) {
        Vector3<long double> rp = r, rm = r;
        rp(a) += h;
        rm(a) -= h;
        const long double fd = -(potential(d, rp, phase, true) - potential(d, rm, phase, true)) / (2 * h);
        const long double scale = d.depth * d.wavevector_trap;
        worst = std::max(worst, double(std::abs(fd - f(a)) / scale));
      }
    }
    v.check(worst < 1e-6, fmt("force vs -grad U: worst %.1e (U0 k units)", worst));
  }

  {
    double worst_pos = 0.0, worst_cycles = 0.0;
    for (double dist : {0.1e-3, 1e-3, 10e-3})
      for (double a : {100.0, 1e4, 1e5}) {
        const SweepProfile p = transport_profile(dist, a, d.wavelength());
        worst_pos = std::max(worst_pos, std::abs(p.state(p.total_duration()).position - dist) / dist);
        worst_cycles = std::max(worst_cycles, std::abs(cycle_count(p) / (2 * dist / d.wavelength()) - 1.0));
      }
    v.check(worst_pos < 1e-12, fmt("z_sw(t_d) relative error %.1e", worst_pos));
    v.check(worst_cycles < 1e-12, fmt("cycle_count vs 2d/lambda %.1e", worst_cycles));
  }

  {
    ExperimentSpec spec = ExperimentSpec::acceleration_scan({6e4, 1.2e5});
    spec.trials = 16;
    spec.seed = 7;
    std::string first;
    bool same = true;
    for (unsigned w : {1u, 2u, 5u}) {
      spec.workers = w;
      std::ostringstream os;
      write_scan_csv(os, run_scan(d, spec));
      if (first.empty()) first = os.str();
      same = same && os.str() == first;
    }
    v.check(same, "seed determinism with 1, 2, 5 workers");
  }

  {
    ExperimentSpec spec = ExperimentSpec::distance_scan({1e-3, 10e-3});
    spec.temperature = 0.0;
    spec.gravity = false;
    spec.noise = NoiseChannels{};
    spec.trials = 2;
    spec.settle_time = 0.1e-3;
    const ScanResult r = run_scan(d, spec);
    v.check(r.points[0].efficiency == 1.0 && r.points[1].efficiency == 1.0,
            fmt("ideal two-way efficiency %.3f, %.3f", r.points[0].efficiency, r.points[1].efficiency));
  }
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("criteria", selected, "Criterion numbers (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "derived quantities", derived_quantities},
      {2, "thermal localization", thermal_localization_check},
      {3, "gravity bound", gravity_bound},
      {4, "jump-heating thresholds", jump_heating},
      {5, "acceleration scan", acceleration_scan},
      {6, "distance scan", distance_scan},
      {7, "lowering scan", lowering},
      {8, "property suites", properties},
  };

  bool ok = true;
  for (const Criterion& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %-24s %s  %s  (%.1f s)\n", c.id, c.name, v.pass ? "PASS" : "FAIL",
                v.detail.str().c_str(), secs);
    std::fflush(stdout);
    ok = ok && v.pass;
  }
  return ok ? 0 : 1;
}
