#include "conveyor/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "conveyor/constants.hpp"
#include "conveyor/error.hpp"

namespace conveyor {

SweepProfile::SweepProfile(std::vector<SweepSegment> segments, double wavelength)
    : segments_(std::move(segments)), wavelength_(wavelength) {
  if (!(wavelength_ > 0.0)) throw ConfigError("sweep wavelength must be positive");
  start_time_.reserve(segments_.size());
  start_cycles_.reserve(segments_.size());
  double t = 0.0;
  double cycles = 0.0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const SweepSegment& s = segments_[i];
    if (!(s.duration > 0.0) || !std::isfinite(s.duration))
      throw ConfigError("sweep segment durations must be positive");
    if (!std::isfinite(s.detuning_start) || !std::isfinite(s.detuning_end))
      throw ConfigError("sweep detuning must be finite");
    if (i > 0 && s.detuning_start != segments_[i - 1].detuning_end) {
      std::ostringstream os;
      os << "sweep segment " << i << " breaks detuning continuity ("
         << segments_[i - 1].detuning_end << " Hz -> " << s.detuning_start << " Hz)";
      throw ConfigError(os.str());
    }
    start_time_.push_back(t);
    start_cycles_.push_back(cycles);
    t += s.duration;
    cycles += 0.5 * (s.detuning_start + s.detuning_end) * s.duration;
  }
  total_duration_ = t;
  total_cycles_ = cycles;
}

SweepProfile SweepProfile::hold(double duration, double wavelength) {
  if (duration == 0.0) return SweepProfile({}, wavelength);
  return SweepProfile({{duration, 0.0, 0.0}}, wavelength);
}

SweepProfile SweepProfile::then(const SweepProfile& next) const {
  if (segments_.empty()) return next;
  if (next.segments_.empty()) return *this;
  if (next.wavelength_ != wavelength_) throw ConfigError("cannot join sweeps of different wavelength");
  std::vector<SweepSegment> joined = segments_;
  joined.insert(joined.end(), next.segments_.begin(), next.segments_.end());
  return SweepProfile(std::move(joined), wavelength_);
}

SweepState SweepProfile::evaluate(std::size_t index, double t) const {
  const SweepSegment& s = segments_[index];
  const double tau = t - start_time_[index];
  const double slope = (s.detuning_end - s.detuning_start) / s.duration;
  const double detuning = s.detuning_start + slope * tau;
  const double cycles = start_cycles_[index] + s.detuning_start * tau + 0.5 * slope * tau * tau;
  const double half = 0.5 * wavelength_;
  return {constants::pi * cycles, half * cycles, half * detuning, half * slope, detuning};
}

SweepState SweepProfile::state(double t) const {
  std::size_t cursor = 0;
  if (!segments_.empty() && t < total_duration_) {
    auto it = std::upper_bound(start_time_.begin(), start_time_.end(), t);
    cursor = static_cast<std::size_t>(std::distance(start_time_.begin(), it)) - 1;
  }
  return state(t, &cursor);
}

SweepState SweepProfile::state(double t, std::size_t* cursor) const {
  if (t < 0.0) throw ConfigError("sweep evaluated at negative time");
  if (segments_.empty() || t >= total_duration_) {
    const double half = 0.5 * wavelength_;
    return {constants::pi * total_cycles_, half * total_cycles_, 0.0, 0.0, 0.0};
  }
  std::size_t i = std::min(*cursor, segments_.size() - 1);
  if (t < start_time_[i]) i = 0;
  while (i + 1 < segments_.size() && t >= start_time_[i + 1]) ++i;
  *cursor = i;
  return evaluate(i, t);
}

double SweepProfile::final_position() const { return 0.5 * wavelength_ * total_cycles_; }

double SweepProfile::max_abs_detuning() const {
  double m = 0.0;
  for (const auto& s : segments_)
    m = std::max({m, std::abs(s.detuning_start), std::abs(s.detuning_end)});
  return m;
}

SweepProfile transport_profile(double distance, double accel, double wavelength,
                               std::optional<double> max_detuning) {
  if (!(accel > 0.0) || !std::isfinite(accel)) throw ConfigError("acceleration must be positive");
  if (distance == 0.0 || !std::isfinite(distance))
    throw ConfigError("transport distance must be non-zero");
  if (!(wavelength > 0.0)) throw ConfigError("wavelength must be positive");

  const double duration = 2.0 * std::sqrt(std::abs(distance) / accel);
  const double v_max = accel * duration / 2.0;
  const double peak = std::copysign(2.0 * v_max / wavelength, distance);
  if (max_detuning && std::abs(peak) > *max_detuning) {
    std::ostringstream os;
    os << "peak mutual detuning " << std::abs(peak) << " Hz exceeds the AOM limit of "
       << *max_detuning << " Hz";
    throw ConstraintError(os.str());
  }
  const double half = duration / 2.0;
  return SweepProfile({{half, 0.0, peak}, {half, peak, 0.0}}, wavelength);
}

SweepProfile shuttle_profile(double distance, double accel, int legs, double wavelength,
                             std::optional<double> max_detuning) {
  if (legs < 1) throw ConfigError("shuttle needs at least one leg");
  const SweepProfile out = transport_profile(distance, accel, wavelength, max_detuning);
  const SweepProfile back = transport_profile(-distance, accel, wavelength, max_detuning);
  std::vector<SweepSegment> segments;
  segments.reserve(2 * static_cast<std::size_t>(legs));
  for (int leg = 0; leg < legs; ++leg) {
    const auto& piece = (leg % 2 == 0) ? out : back;
    segments.insert(segments.end(), piece.segments().begin(), piece.segments().end());
  }
  return SweepProfile(std::move(segments), wavelength);
}

namespace {

struct AccelPiece {
  double duration;
  double accel;
};

// Constant-acceleration staircase of a raised-cosine transport with the
// given plateau length; unit peak acceleration.
std::vector<AccelPiece> smooth_pieces(double ramp_time, double plateau, int steps) {
  std::vector<AccelPiece> half;
  const double dt = ramp_time / steps;
  auto ramp_mean = [&](int j) {
    // mean of (1 - cos(pi t / T)) / 2 over [j dt, (j+1) dt]
    const double t1 = j * dt, t2 = (j + 1) * dt;
    const double w = constants::pi / ramp_time;
    return 0.5 * (1.0 - (std::sin(w * t2) - std::sin(w * t1)) / (w * dt));
  };
  for (int j = 0; j < steps; ++j) half.push_back({dt, ramp_mean(j)});
  if (plateau > 0.0) half.push_back({plateau, 1.0});
  for (int j = steps - 1; j >= 0; --j) half.push_back({dt, ramp_mean(j)});

  std::vector<AccelPiece> all = half;
  for (const auto& p : half) all.push_back({p.duration, -p.accel});
  return all;
}

double staircase_distance(const std::vector<AccelPiece>& pieces) {
  double v = 0.0, x = 0.0;
  for (const auto& p : pieces) {
    x += v * p.duration + 0.5 * p.accel * p.duration * p.duration;
    v += p.accel * p.duration;
  }
  return x;
}

}  // namespace

SweepProfile smooth_transport_profile(double distance, double peak_accel, double ramp_time,
                                      double wavelength, int steps_per_ramp) {
  if (!(peak_accel > 0.0)) throw ConfigError("acceleration must be positive");
  if (distance == 0.0) throw ConfigError("transport distance must be non-zero");
  if (!(ramp_time > 0.0)) throw ConfigError("ramp time must be positive");
  if (steps_per_ramp < 1) throw ConfigError("steps_per_ramp must be at least 1");

  const double target = std::abs(distance) / peak_accel;  // distance at unit acceleration
  if (staircase_distance(smooth_pieces(ramp_time, 0.0, steps_per_ramp)) > target)
    throw ConfigError("ramp time too long for the requested distance and acceleration");

  double lo = 0.0, hi = 2.0 * std::sqrt(target) + ramp_time;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (staircase_distance(smooth_pieces(ramp_time, mid, steps_per_ramp)) < target ? lo : hi) = mid;
  }
  auto pieces = smooth_pieces(ramp_time, 0.5 * (lo + hi), steps_per_ramp);
  const double scale = std::copysign(peak_accel, distance) * target / staircase_distance(pieces);

  std::vector<SweepSegment> segments;
  double nu = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const double next =
        (i + 1 == pieces.size()) ? 0.0 : nu + 2.0 * scale * pieces[i].accel * pieces[i].duration / wavelength;
    segments.push_back({pieces[i].duration, nu, next});
    nu = next;
  }
  return SweepProfile(std::move(segments), wavelength);
}

double cycle_count(const SweepProfile& p) {
  double total = 0.0;
  for (const auto& s : p.segments()) {
    const double a = s.detuning_start, b = s.detuning_end;
    if ((a >= 0.0 && b >= 0.0) || (a <= 0.0 && b <= 0.0)) {
      total += 0.5 * std::abs(a + b) * s.duration;
    } else {
      const double f = a / (a - b);  // zero crossing as a fraction of the segment
      total += 0.5 * (std::abs(a) * f + std::abs(b) * (1.0 - f)) * s.duration;
    }
  }
  return total;
}

void AomModel::validate() const {
  if (efficiency_curve.empty()) throw ConfigError("AOM efficiency curve is empty");
  if (efficiency_curve.front().first != 0.0 || efficiency_curve.front().second != 1.0)
    throw ConfigError("AOM efficiency curve must start at (0, 1)");
  for (std::size_t i = 1; i < efficiency_curve.size(); ++i) {
    const auto& [f0, e0] = efficiency_curve[i - 1];
    const auto& [f1, e1] = efficiency_curve[i];
    if (!(f1 > f0)) throw ConfigError("AOM efficiency curve offsets must increase");
    if (!(e1 <= e0 && e1 > 0.0)) throw ConfigError("AOM efficiency must be non-increasing and positive");
  }
  if (!(max_offset > 0.0)) throw ConfigError("AOM max_offset must be positive");
}

double AomModel::efficiency(double rf_offset) const {
  const double f = std::abs(rf_offset);
  const auto& c = efficiency_curve;
  if (f >= c.back().first) {
    if (f > c.back().first && c.size() > 1) {
      static std::atomic_flag warned = ATOMIC_FLAG_INIT;
      if (!warned.test_and_set())
        warn("AOM offset beyond the efficiency table; clamping to the last point");
    }
    return c.back().second;
  }
  auto it = std::upper_bound(c.begin(), c.end(), f,
                             [](double v, const auto& point) { return v < point.first; });
  const auto& [f1, e1] = *it;
  const auto& [f0, e0] = *(it - 1);
  return e0 + (e1 - e0) * (f - f0) / (f1 - f0);
}

double depth_scaling(const AomModel& m, double detuning) {
  const double rf = std::abs(detuning) / (m.double_pass ? 2.0 : 1.0);
  const double eta = m.efficiency(rf);
  return m.sqrt_depth ? std::sqrt(eta) : eta;
}

void write_profile_csv(std::ostream& os, const SweepProfile& p, double sample_rate) {
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  os << "t_s,detuning_Hz,z_sw_m,v_sw_m_s,a_sw_m_s2\n";
  const auto old_precision = os.precision(12);
  const double T = p.total_duration();
  const auto count = static_cast<std::size_t>(std::floor(T * sample_rate));
  std::size_t cursor = 0;
  auto row = [&](double t) {
    const SweepState s = p.state(t, &cursor);
    os << t << ',' << s.detuning << ',' << s.position << ',' << s.velocity << ','
       << s.acceleration << '\n';
  };
  for (std::size_t i = 0; i <= count; ++i) row(static_cast<double>(i) / sample_rate);
  if (static_cast<double>(count) / sample_rate < T) row(T);
  os.precision(old_precision);
}

}  // namespace conveyor
