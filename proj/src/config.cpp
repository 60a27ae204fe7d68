#include "conveyor/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "conveyor/constants.hpp"
#include "conveyor/error.hpp"

#ifndef CONVEYOR_REVISION
#define CONVEYOR_REVISION "unknown"
#endif

namespace conveyor {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format(double value) {
  std::ostringstream os;
  os << std::setprecision(12) << value;
  return os.str();
}

const KeySpec& spec_of(std::string_view key) {
  for (const auto& k : config_keys())
    if (k.key == key) return k;
  throw std::logic_error("unknown config key");
}

double number(const KeyValues& kv, std::string_view key) {
  const std::string& text = kv.values.at(std::string(key));
  std::istringstream is(text);
  double value = 0.0;
  is >> value;
  if (!is || !(is >> std::ws).eof()) {
    std::ostringstream os;
    os << "key '" << key << "' (line " << kv.lines.at(std::string(key)) << "): expected a number in "
       << spec_of(key).unit << ", got '" << text << "'";
    throw ConfigError(os.str());
  }
  return value;
}

bool flag(const KeyValues& kv, std::string_view key) {
  std::string text = kv.values.at(std::string(key));
  std::transform(text.begin(), text.end(), text.begin(), ::tolower);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("key '" + std::string(key) + "': expected true or false, got '" + text + "'");
}

bool has(const KeyValues& kv, std::string_view key) {
  return kv.values.count(std::string(key)) != 0;
}

}  // namespace

KeyValues parse_key_values(std::istream& is) {
  KeyValues kv;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    if (kv.values.count(key))
      throw ConfigError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
    kv.values[key] = value;
    kv.lines[key] = number;
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in);
}

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys{
      {"power_W", "W (total of both beams)", true},
      {"waist_um", "um", true},
      {"wavelength_trap_nm", "nm", true},
      {"wavelength_d1_nm", "nm", true},
      {"wavelength_d2_nm", "nm", true},
      {"linewidth_MHz", "MHz (Gamma / 2 pi)", true},
      {"saturation_intensity_mW_cm2", "mW/cm^2", true},
      {"atom_mass_kg", "kg", true},
      {"gravity_m_s2", "m/s^2", false},
      {"gravity_axis", "unit vector 'x y z'", false},
      {"contrast", "dimensionless, (0, 1]", false},
      {"rayleigh_length_mm", "mm", false},
      {"aom_center_MHz", "MHz", false},
      {"aom_max_offset_MHz", "MHz (RF)", false},
      {"aom_half_efficiency_MHz", "MHz (RF offset where efficiency is 0.5)", false},
      {"aom_double_pass", "true/false", false},
      {"aom_sqrt_depth", "true/false", false},
  };
  return keys;
}

TrapConfig trap_config_from(const KeyValues& kv, std::vector<std::string>* warnings) {
  std::vector<std::string> missing;
  for (const auto& k : config_keys())
    if (k.required && !has(kv, k.key))
      missing.push_back(std::string(k.key) + " [" + std::string(k.unit) + "]");
  if (!missing.empty()) {
    std::string msg = "missing required config keys:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw ConfigError(msg);
  }
  for (const auto& [key, value] : kv.values) {
    const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                   [&](const KeySpec& k) { return k.key == key; });
    if (!known) {
      const std::string w = "unknown config key '" + key + "' (line " +
                            std::to_string(kv.lines.at(key)) + ") ignored";
      if (warnings) warnings->push_back(w);
      warn(w);
    }
  }

  TrapConfig cfg;
  cfg.power_total = number(kv, "power_W");
  cfg.waist = number(kv, "waist_um") * 1e-6;
  cfg.wavelength_trap = number(kv, "wavelength_trap_nm") * 1e-9;
  cfg.wavelength_d1 = number(kv, "wavelength_d1_nm") * 1e-9;
  cfg.wavelength_d2 = number(kv, "wavelength_d2_nm") * 1e-9;
  cfg.linewidth = constants::two_pi * number(kv, "linewidth_MHz") * 1e6;
  cfg.saturation_intensity = number(kv, "saturation_intensity_mW_cm2") * 10.0;
  cfg.atom_mass = number(kv, "atom_mass_kg");
  if (has(kv, "gravity_m_s2")) cfg.gravity = number(kv, "gravity_m_s2");
  if (has(kv, "gravity_axis")) {
    std::istringstream is(kv.values.at("gravity_axis"));
    Eigen::Vector3d axis;
    if (!(is >> axis.x() >> axis.y() >> axis.z()))
      throw ConfigError("key 'gravity_axis': expected three numbers 'x y z'");
    if (!(axis.norm() > 0.0)) throw ConfigError("key 'gravity_axis': zero vector");
    cfg.gravity_axis = axis.normalized();
  }
  if (has(kv, "contrast")) cfg.contrast = number(kv, "contrast");
  if (has(kv, "rayleigh_length_mm")) cfg.rayleigh_override = number(kv, "rayleigh_length_mm") * 1e-3;
  cfg.validate();
  return cfg;
}

AomModel aom_model_from(const KeyValues& kv) {
  AomModel aom;
  if (has(kv, "aom_center_MHz")) aom.center_freq = number(kv, "aom_center_MHz") * 1e6;
  if (has(kv, "aom_max_offset_MHz")) aom.max_offset = number(kv, "aom_max_offset_MHz") * 1e6;
  if (has(kv, "aom_half_efficiency_MHz"))
    aom.efficiency_curve = {{0.0, 1.0}, {number(kv, "aom_half_efficiency_MHz") * 1e6, 0.5}};
  if (has(kv, "aom_double_pass")) aom.double_pass = flag(kv, "aom_double_pass");
  if (has(kv, "aom_sqrt_depth")) aom.sqrt_depth = flag(kv, "aom_sqrt_depth");
  aom.validate();
  return aom;
}

Metadata describe(const TrapConfig& cfg) {
  Metadata m{
      {"power_W", format(cfg.power_total)},
      {"waist_um", format(cfg.waist * 1e6)},
      {"wavelength_trap_nm", format(cfg.wavelength_trap * 1e9)},
      {"wavelength_d1_nm", format(cfg.wavelength_d1 * 1e9)},
      {"wavelength_d2_nm", format(cfg.wavelength_d2 * 1e9)},
      {"linewidth_MHz", format(cfg.linewidth / constants::two_pi * 1e-6)},
      {"saturation_intensity_mW_cm2", format(cfg.saturation_intensity / 10.0)},
      {"atom_mass_kg", format(cfg.atom_mass)},
      {"gravity_m_s2", format(cfg.gravity)},
      {"gravity_axis", format(cfg.gravity_axis.x()) + " " + format(cfg.gravity_axis.y()) + " " +
                           format(cfg.gravity_axis.z())},
      {"contrast", format(cfg.contrast)},
  };
  if (cfg.rayleigh_override) m.emplace_back("rayleigh_length_mm", format(*cfg.rayleigh_override * 1e3));
  return m;
}

Metadata describe(const AomModel& aom) {
  Metadata m{
      {"aom_center_MHz", format(aom.center_freq * 1e-6)},
      {"aom_max_offset_MHz", format(aom.max_offset * 1e-6)},
      {"aom_double_pass", aom.double_pass ? "true" : "false"},
      {"aom_sqrt_depth", aom.sqrt_depth ? "true" : "false"},
  };
  std::string curve;
  for (const auto& [f, eta] : aom.efficiency_curve)
    curve += (curve.empty() ? "" : " ") + format(f * 1e-6) + ":" + format(eta);
  m.emplace_back("aom_efficiency_curve_MHz", curve);
  return m;
}

void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [key, value] : meta) os << "# " << key << " = " << value << '\n';
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const Metadata& meta) {
  std::string text;
  for (const auto& [k, v] : meta) text += k + "=" + v + "\n";
  return fnv1a(text);
}

std::vector<double> parse_values(std::string_view text) {
  auto to_number = [&](const std::string& piece) {
    std::istringstream is(piece);
    double v = 0.0;
    is >> v;
    if (!is || !(is >> std::ws).eof())
      throw ConfigError("cannot parse scan value '" + piece + "' in '" + std::string(text) + "'");
    return v;
  };
  std::vector<std::string> parts;
  const char sep = text.find(':') != std::string_view::npos ? ':' : ',';
  std::string current;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(trim(current));

  std::vector<double> out;
  if (sep == ',') {
    for (const auto& p : parts) out.push_back(to_number(p));
    return out;
  }
  const bool geometric = parts.size() == 4 && parts[3] == "log";
  if (parts.size() != 3 && !geometric)
    throw ConfigError("scan values must be start:stop:count[:log], got '" + std::string(text) + "'");
  const double start = to_number(parts[0]);
  const double stop = to_number(parts[1]);
  const double count = to_number(parts[2]);
  if (!(count >= 1.0) || count != std::floor(count))
    throw ConfigError("scan count must be a positive integer, got '" + parts[2] + "'");
  if (geometric && !(start > 0.0 && stop > 0.0))
    throw ConfigError("geometric scan needs positive endpoints");
  const auto n = static_cast<std::size_t>(count);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out.push_back(geometric ? start * std::pow(stop / start, f) : start + f * (stop - start));
  }
  return out;
}

const char* revision() { return CONVEYOR_REVISION; }

}  // namespace conveyor
