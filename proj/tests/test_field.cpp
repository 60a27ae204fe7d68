#include <doctest.h>

#include <random>

#include "conveyor/field.hpp"
#include "conveyor/trap.hpp"

using namespace conveyor;

namespace {

DerivedTrap trap(double contrast = 1.0) {
  TrapConfig cfg;
  cfg.rayleigh_override = 3e-3;
  cfg.contrast = contrast;
  return derive(cfg);
}

// Central difference of the potential in long double.
Vector3<long double> numeric_force(const DerivedTrap& d, const Eigen::Vector3d& r, double phase,
                                   bool gravity, double scale, const Eigen::Vector3d& step) {
  Vector3<long double> out;
  const Vector3<long double> base = r.cast<long double>();
  for (int i = 0; i < 3; ++i) {
    Vector3<long double> plus = base, minus = base;
    plus(i) += step(i);
    minus(i) -= step(i);
    const long double up = potential(d, plus, phase, gravity, scale);
    const long double down = potential(d, minus, phase, gravity, scale);
    out(i) = -(up - down) / (2.0L * step(i));
  }
  return out;
}

}  // namespace

TEST_CASE("force is minus the gradient of the potential") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double contrast : {1.0, 0.8}) {
    const DerivedTrap d = trap(contrast);
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Vector3d r(30e-6 * u(rng), 30e-6 * u(rng), 5e-3 * u(rng));
      const double phase = 3.0 * u(rng);
      const double scale = 0.5 + 0.5 * std::abs(u(rng));
      const bool gravity = trial % 2 == 0;
      const Eigen::Vector3d step(1e-9, 1e-9, 1e-11);
      const Vector3<long double> fd = numeric_force(d, r, phase, gravity, scale, step);
      const Eigen::Vector3d f = force(d, r, phase, gravity, scale);
      const double norm = d.depth * d.wavevector_trap;
      for (int i = 0; i < 3; ++i)
        CHECK(std::abs(f(i) - static_cast<double>(fd(i))) < 1e-6 * norm);
    }
  }
}

TEST_CASE("well bottoms sit at the standing-wave antinodes") {
  const DerivedTrap d = trap();
  const Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  CHECK(potential(d, origin, 0.0, false) == doctest::Approx(-d.depth).epsilon(1e-14));
  const Eigen::Vector3d node(0, 0, d.wavelength() / 4);
  CHECK(std::abs(potential(d, node, 0.0, false)) < 1e-12 * d.depth);
  // Shifting the phase by pi moves the lattice by half a period.
  const Eigen::Vector3d next(0, 0, d.wavelength() / 2);
  CHECK(potential(d, next, constants::pi, false) == doctest::Approx(-d.depth).epsilon(1e-12));
  CHECK(force(d, origin, 0.0, false).norm() < 1e-12 * d.depth * d.wavevector_trap);
}

TEST_CASE("reduced contrast lifts the node floor") {
  const DerivedTrap d = trap(0.6);
  const Eigen::Vector3d node(0, 0, d.wavelength() / 4);
  CHECK(potential(d, node, 0.0, false) == doctest::Approx(-0.2 * d.depth).epsilon(1e-12));
  CHECK(potential(d, Eigen::Vector3d::Zero(), 0.0, false) == doctest::Approx(-d.depth));
}

TEST_CASE("gravity adds m g along the up axis") {
  const DerivedTrap d = trap();
  const Eigen::Vector3d r(1e-3, 0, 0);
  const double with = potential(d, r, 0.0, true);
  const double without = potential(d, r, 0.0, false);
  CHECK(with - without == doctest::Approx(d.mass() * d.config.gravity * 1e-3).epsilon(1e-12));
  const Eigen::Vector3d f = force(d, r, 0.0, true) - force(d, r, 0.0, false);
  CHECK(f.x() == doctest::Approx(-d.mass() * d.config.gravity).epsilon(1e-12));
}

TEST_CASE("depth scale multiplies the dipole part only") {
  const DerivedTrap d = trap();
  const Eigen::Vector3d r(5e-6, -3e-6, 2e-7);
  const double a = potential(d, r, 0.1, false, 1.0);
  const double b = potential(d, r, 0.1, false, 0.25);
  CHECK(b == doctest::Approx(0.25 * a).epsilon(1e-14));
}

TEST_CASE("finite-difference force with 1e-10 m steps agrees to 1e-5 relative") {
  const DerivedTrap d = trap();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Vector3d r(20e-6 * u(rng), 20e-6 * u(rng), 1e-3 * u(rng));
    const Eigen::Vector3d step = Eigen::Vector3d::Constant(1e-10);
    const Vector3<long double> fd = numeric_force(d, r, 0.3, false, 1.0, step);
    const Eigen::Vector3d f = force(d, r, 0.3, false);
    for (int i = 0; i < 3; ++i) {
      // Away from zero-force points only.
      if (std::abs(f(i)) < 1e-3 * d.depth / d.waist()) continue;
      CHECK(std::abs(f(i) / static_cast<double>(fd(i)) - 1.0) < 1e-5);
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("gravity alone at the well bottom") {
  const DerivedTrap d = trap();
  const Eigen::Vector3d f = force(d, Eigen::Vector3d::Zero(), 0.0, true);
  CHECK(f.x() == doctest::Approx(-d.mass() * d.config.gravity).epsilon(1e-12));
  CHECK(std::abs(f.y()) < 1e-40);
  CHECK(std::abs(f.z()) < 1e-40);
}

TEST_CASE("potential stays within its bounds and is pi periodic in phase") {
  const DerivedTrap d = trap();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double weight = d.mass() * d.config.gravity;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Vector3d r(100e-6 * u(rng), 100e-6 * u(rng), 20e-3 * u(rng));
    const double phase = 10.0 * u(rng);
    const double without = potential(d, r, phase, false);
    CHECK(without <= 0.0);
    CHECK(without >= -d.depth);
    const double with = potential(d, r, phase, true);
    const double g = weight * std::abs(r.x());
    CHECK(with <= g);
    CHECK(with >= -d.depth - g);
    CHECK(potential(d, r, phase + constants::pi, true) ==
          doctest::Approx(with).epsilon(1e-9).scale(d.depth));
  }
}

TEST_CASE("harmonic limit at the well bottom") {
  const DerivedTrap d = trap();
  const double dz = d.wavelength() / 50;
  const double dr = d.waist() / 50;
  const double m = d.mass();
  const double harmonic = 0.5 * m * d.freq_axial * d.freq_axial * dz * dz +
                          0.5 * m * d.freq_radial * d.freq_radial * dr * dr;
  const double actual = potential(d, Eigen::Vector3d(dr, 0, dz), 0.0, false) + d.depth;
  CHECK(actual == doctest::Approx(harmonic).epsilon(0.01));
}

TEST_CASE("derive identities hold to machine precision") {
  const DerivedTrap d = trap();
  CHECK(d.accel_max * d.mass() == doctest::Approx(d.depth * d.wavevector_trap).epsilon(1e-15));
  CHECK(d.freq_axial * d.freq_axial ==
        doctest::Approx(2 * d.depth * d.wavevector_trap * d.wavevector_trap / d.mass())
            .epsilon(1e-15));
}
