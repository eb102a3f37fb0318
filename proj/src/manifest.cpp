#include "crowdsense/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"

namespace crowdsense {

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  return nlohmann::json{{"artifact_version", m.artifact_version},
                        {"command", m.command},
                        {"preset", m.preset},
                        {"config_hash", m.config_hash},
                        {"master_seed", m.master_seed},
                        {"sims", m.sims},
                        {"jobs", m.jobs},
                        {"started_utc", m.started_utc},
                        {"finished_utc", m.finished_utc},
                        {"outputs", m.outputs},
                        {"effective_config", m.effective_config}};
}

RunManifest manifest_from_json(const nlohmann::json& doc) {
  RunManifest m;
  m.artifact_version = doc.at("artifact_version").get<std::string>();
  m.command = doc.at("command").get<std::string>();
  m.preset = doc.at("preset").get<std::string>();
  m.config_hash = doc.at("config_hash").get<std::string>();
  m.master_seed = doc.at("master_seed").get<std::uint64_t>();
  m.sims = doc.at("sims").get<std::size_t>();
  m.jobs = doc.at("jobs").get<unsigned>();
  m.started_utc = doc.at("started_utc").get<std::string>();
  m.finished_utc = doc.at("finished_utc").get<std::string>();
  m.outputs = doc.at("outputs").get<std::vector<std::string>>();
  m.effective_config = doc.at("effective_config");
  return m;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  write_file_atomic(path, manifest_to_json(manifest).dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest: cannot open '" + path + "'");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("manifest: '" + path + "' is not valid JSON");
  return manifest_from_json(doc);
}

}  // namespace crowdsense
