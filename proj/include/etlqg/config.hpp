#pragma once

#include <cstdint>
#include <string>

#include "etlqg/model.hpp"
#include "etlqg/simulate.hpp"

namespace etlqg {

// Parsed experiment description. See README.md for the JSON schema; unknown
// keys anywhere in the document are rejected.
struct ExperimentConfig {
  TimeVaryingLinearSystem sys;
  CostSpec cost;
  TriggerKind trigger = TriggerKind::kVoi;
  PeriodicSpec periodic{};
  int runs = 1;
  std::uint64_t seed = 0;
  std::string out;  // output path prefix
};

// Parses the JSON text of a config. Throws ConfigError with field context on
// any structural problem (unknown key, wrong type, bad dimensions).
ExperimentConfig parse_config(const std::string& text);

// Reads and parses a config file. Parse errors carry the path and, for JSON
// syntax errors, the byte position.
ExperimentConfig load_config(const std::string& path);

// Canonical JSON serialization; parse_config(serialize_config(c)) is
// structurally equal to c. Matrices are emitted in full (broadcast sequences
// stay length-1), so the form is stable under round-trips.
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a 64-bit hash of the canonical serialization. Embedded in every
// output file so artifacts can be traced back to their exact inputs.
std::uint64_t config_hash(const ExperimentConfig& config);

// Stable names used in configs, CLI flags, and output metadata:
// voi, periodic, always, never, exact_scalar_dp.
const char* trigger_kind_name(TriggerKind kind);
TriggerKind trigger_kind_from(const std::string& name);  // throws ConfigError

}  // namespace etlqg
