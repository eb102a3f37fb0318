#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "crowdsense/search/campaign.hpp"

namespace crowdsense {

// Scenario settings layered from preset defaults, an optional config file,
// and command-line overrides, in that order.
struct ScenarioConfig {
  std::string preset = "melbourne-scale";
  SearchConfig search;
  std::size_t sims = 100;
  unsigned jobs = 1;
  std::uint64_t seed = 1;
};

std::vector<std::string> preset_names();

// Complete JSON document for a named preset. Throws ConfigError for an
// unknown name.
nlohmann::json preset_config(const std::string& name);

// Recursive overlay: objects merge key by key, everything else replaces.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

// Applies one "dotted.path=value" override. The path must already exist in
// the document; the value is parsed as JSON when possible and kept as a
// string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Strict parse: unknown keys, wrong types, and out-of-range values all throw
// ConfigError naming the offending key.
ScenarioConfig parse_config(const nlohmann::json& doc);

// Builds the effective configuration: preset defaults, then the optional
// config file, then --set overrides. Returns the parsed scenario and writes
// the merged document to effective_doc.
ScenarioConfig load_scenario(const std::string& preset, const std::string& config_path,
                             const std::vector<std::string>& overrides, nlohmann::json& effective_doc);

// Deterministic serialization (sorted keys, fixed spacing) used for hashing
// and for the manifest.
std::string canonical_dump(const nlohmann::json& doc);

// FNV-1a 64-bit hash of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace crowdsense
