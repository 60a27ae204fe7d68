#include <doctest.h>

#include <cmath>
#include <sstream>

#include "conveyor/dynamics.hpp"
#include "conveyor/error.hpp"
#include "conveyor/experiments.hpp"
#include "conveyor/trap.hpp"

using namespace conveyor;

namespace {

DerivedTrap trap() {
  TrapConfig cfg;
  cfg.rayleigh_override = 3e-3;
  return derive(cfg);
}

// Ideal conditions: cold atom, no gravity, no noise.
ExperimentSpec ideal(ExperimentSpec s) {
  s.temperature = 0.0;
  s.gravity = false;
  s.noise = NoiseChannels{};
  s.settle_time = 0.1e-3;
  s.trials = 3;
  return s;
}

}  // namespace

TEST_CASE("Wilson interval") {
  auto [lo, hi] = confidence_interval(50, 100);
  CHECK(lo == doctest::Approx(0.404).epsilon(1e-3 / 0.404));
  CHECK(hi == doctest::Approx(0.596).epsilon(1e-3 / 0.596));
  std::tie(lo, hi) = confidence_interval(0, 40);
  CHECK(lo == 0.0);
  CHECK(hi > 0.0);
  std::tie(lo, hi) = confidence_interval(40, 40);
  CHECK(hi == doctest::Approx(1.0));
  CHECK(lo < 1.0);
  // Width shrinks as 1/sqrt(n) for a fixed fraction.
  const auto [a0, a1] = confidence_interval(100, 200);
  const auto [b0, b1] = confidence_interval(400, 800);
  CHECK((a1 - a0) / (b1 - b0) == doctest::Approx(2.0).epsilon(0.01));
  CHECK_THROWS_AS(confidence_interval(3, 2), ConfigError);
  CHECK_THROWS_AS(confidence_interval(0, 0), ConfigError);
}

TEST_CASE("thermal energy conventions") {
  const DerivedTrap d = trap();
  const double kb = constants::boltzmann;
  CHECK(kb * temperature_for_energy(d, 0.15, ThermalConvention::AxialEnergy) ==
        doctest::Approx(0.15 * d.depth));
  CHECK(kb * temperature_for_energy(d, 0.15, ThermalConvention::Temperature) ==
        doctest::Approx(0.15 * d.depth));
  CHECK(3 * kb * temperature_for_energy(d, 0.15, ThermalConvention::TotalEnergy) ==
        doctest::Approx(0.15 * d.depth));
}

TEST_CASE("thermal sampling") {
  const DerivedTrap d = trap();
  Rng rng = make_stream(1, 0);
  const AtomState cold = sample_thermal(d, 0.0, rng, false);
  CHECK(cold.position.norm() == 0.0);
  CHECK(cold.velocity.norm() == 0.0);
  const AtomState sag = sample_thermal(d, 0.0, rng, true);
  // Harmonic sag g / Omega_rad^2 against the potential slope m g x.
  CHECK(sag.position.x() == doctest::Approx(-d.config.gravity / (d.freq_radial * d.freq_radial)).epsilon(0.01));
  CHECK(std::abs(sag.position.z()) < 1e-15);

  const double t = 50e-6;
  const ThermalWidths w = thermal_localization(d, t);
  const int n = 20000;
  double sz = 0, sx = 0, vz = 0, e = 0;
  for (int i = 0; i < n; ++i) {
    const AtomState s = sample_thermal(d, t, rng, false);
    sz += s.position.z() * s.position.z();
    sx += s.position.x() * s.position.x();
    vz += s.velocity.z() * s.velocity.z();
    e += well_frame_energy(d, s, SweepState{0, 0, 0, 0, 0}, 1.0, false);
    CHECK(well_frame_energy(d, s, SweepState{0, 0, 0, 0, 0}, 1.0, false) < 0.8 * d.depth);
  }
  CHECK(std::sqrt(sz / n) == doctest::Approx(w.axial).epsilon(0.05));
  CHECK(std::sqrt(sx / n) == doctest::Approx(w.radial).epsilon(0.05));
  CHECK(d.mass() * vz / n == doctest::Approx(constants::boltzmann * t).epsilon(0.05));
  CHECK(e / n == doctest::Approx(6 * 0.5 * constants::boltzmann * t).epsilon(0.05));
  CHECK_THROWS_AS(sample_thermal(d, -1.0, rng), ConfigError);
}

TEST_CASE("ideal transport is lossless") {
  const DerivedTrap d = trap();
  ExperimentSpec s = ideal(ExperimentSpec::distance_scan({1e-3, 5e-3}));
  s.workers = 2;
  const ScanResult r = run_scan(d, s);
  REQUIRE(r.points.size() == 2);
  for (const ScanPoint& p : r.points) {
    CHECK(p.efficiency == 1.0);
    CHECK(p.successes == p.trials);
    CHECK(p.mean_final_energy_over_U0 < 0.05);
  }
}

TEST_CASE("scan results do not depend on the worker count") {
  const DerivedTrap d = trap();
  ExperimentSpec s = ExperimentSpec::acceleration_scan({5e4, 1e5, 1.5e5});
  s.trials = 12;
  s.seed = 99;
  s.workers = 1;
  const ScanResult one = run_scan(d, s);
  s.workers = 3;
  const ScanResult three = run_scan(d, s);
  REQUIRE(one.points.size() == three.points.size());
  for (std::size_t i = 0; i < one.points.size(); ++i) {
    CHECK(one.points[i].successes == three.points[i].successes);
    CHECK(one.points[i].transported == three.points[i].transported);
    CHECK((one.points[i].mean_final_energy_over_U0 == three.points[i].mean_final_energy_over_U0 ||
           std::isnan(one.points[i].mean_final_energy_over_U0)));
  }
  std::ostringstream a, b;
  write_scan_csv(a, one);
  write_scan_csv(b, three);
  CHECK(a.str() == b.str());
}

TEST_CASE("shuttle with zero legs holds the atom") {
  const DerivedTrap d = trap();
  ExperimentSpec s = ideal(ExperimentSpec::shuttle_scan({0, 2}));
  const ScanResult r = run_scan(d, s);
  CHECK(r.points[0].efficiency == 1.0);
  CHECK(r.points[1].efficiency == 1.0);
}

TEST_CASE("experiment validation") {
  ExperimentSpec s = ExperimentSpec::distance_scan({1e-3});
  CHECK_NOTHROW(s.validate());
  s.trials = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ExperimentSpec::distance_scan({});
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ExperimentSpec::distance_scan({1e-3});
  s.temperature = -1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ExperimentSpec::lowering_scan({0.0});
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ExperimentSpec::shuttle_scan({1.5});
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ExperimentSpec::distance_scan({1e-3});
  s.capture_radius = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("scan CSV carries metadata and the fixed header") {
  const DerivedTrap d = trap();
  ExperimentSpec s = ideal(ExperimentSpec::distance_scan({1e-3}));
  s.trials = 2;
  const ScanResult r = run_scan(d, s);
  CHECK(r.seed == kDefaultSeed);
  CHECK(r.config_hash == config_hash(r.metadata));
  std::ostringstream os;
  write_scan_csv(os, r);
  const std::string text = os.str();
  CHECK(text.find("# revision = ") != std::string::npos);
  CHECK(text.find("# config_hash = ") != std::string::npos);
  CHECK(text.find("# power_W = 4") != std::string::npos);
  CHECK(text.find("# seed = 424242") != std::string::npos);
  CHECK(text.find("\nscan_value,efficiency,ci_low,ci_high,trials,mean_final_energy_over_U0\n") !=
        std::string::npos);
}
