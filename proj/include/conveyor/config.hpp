#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conveyor/sweep.hpp"
#include "conveyor/trap.hpp"

namespace conveyor {

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// Flat "key = value" file. '#' starts a comment; blank lines are ignored.
struct KeyValues {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;
};

/// Throws ConfigError naming the line for malformed or duplicate entries.
KeyValues parse_key_values(std::istream& is);
KeyValues load_key_values(const std::filesystem::path& path);

/// Recognised keys and their units, in the order they are documented.
struct KeySpec {
  std::string_view key;
  std::string_view unit;
  bool required;
};
const std::vector<KeySpec>& config_keys();

/// Builds a validated trap configuration. Missing required keys are reported
/// together; unknown keys produce warnings (appended to `warnings`).
TrapConfig trap_config_from(const KeyValues& kv, std::vector<std::string>* warnings = nullptr);
/// AOM keys are optional; absent keys keep the AomModel defaults.
AomModel aom_model_from(const KeyValues& kv);

/// Resolved configuration in config-file keys, for output headers.
Metadata describe(const TrapConfig& cfg);
Metadata describe(const AomModel& aom);

/// Writes metadata as "# key = value" lines.
void write_metadata(std::ostream& os, const Metadata& meta);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);
std::uint64_t config_hash(const Metadata& meta);

/// Scan values from "start:stop:count" (linear), "start:stop:count:log"
/// (geometric) or a comma-separated list. Throws ConfigError.
std::vector<double> parse_values(std::string_view text);

/// Source revision the library was built from.
const char* revision();

}  // namespace conveyor
