#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace crowdsense {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Provenance record written next to every batch of outputs: what produced
// them, from which configuration, and with which seed.
struct RunManifest {
  std::string artifact_version = kArtifactVersion;
  std::string command;
  std::string preset;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::size_t sims = 0;
  unsigned jobs = 0;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;
  nlohmann::json effective_config;
};

std::string utc_timestamp_now();

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& doc);

// Atomic write (temp file plus rename) of the manifest JSON.
void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

}  // namespace crowdsense
