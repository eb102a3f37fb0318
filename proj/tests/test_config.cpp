#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "crowdsense/config.hpp"
#include "crowdsense/errors.hpp"
#include "crowdsense/manifest.hpp"

using namespace crowdsense;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("every preset parses and validates") {
  for (const std::string& name : preset_names()) {
    const nlohmann::json doc = preset_config(name);
    CHECK_NOTHROW((void)parse_config(doc));
  }
  CHECK_THROWS_AS((void)preset_config("no-such-preset"), ConfigError);
}

TEST_CASE("presets carry their documented settings") {
  const ScenarioConfig full = parse_config(preset_config("melbourne-scale"));
  CHECK(full.search.city.side_m == 6000.0);
  CHECK(full.search.city.n_spots == 24067);
  CHECK(full.search.city.occupancy_prob == 0.5);
  CHECK(full.search.r_target == 7200.0);
  CHECK(full.search.controller_alpha == -4.01);
  CHECK(full.search.controller_gamma == 0.99);
  CHECK(full.search.controller_kappa == 0.1);
  CHECK(full.search.pedestrian_enabled);
  CHECK(full.sims == 100);
  CHECK(full.jobs == 1);
  CHECK(full.seed == 1);
  CHECK(full.search.filter.kind == FilterSpec::Kind::identity);

  const ScenarioConfig reg = parse_config(preset_config("regulation-only"));
  CHECK_FALSE(reg.search.pedestrian_enabled);
  CHECK(reg.sims == 10);

  const ScenarioConfig smoke = parse_config(preset_config("smoke"));
  CHECK(smoke.search.city.side_m == 1200.0);
  CHECK(smoke.search.city.n_spots == 600);
  CHECK(smoke.search.r_target == 180.0);
  CHECK(smoke.search.timeout_s == 300);
  CHECK(smoke.sims == 2);
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  nlohmann::json doc = preset_config("smoke");
  doc["control"]["gama"] = 0.5;
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: unknown key 'control.gama'", ConfigError);

  doc = preset_config("smoke");
  doc["extra"] = 1;
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: unknown key 'extra'", ConfigError);

  doc = preset_config("smoke");
  doc.erase("run");
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: missing section 'run'", ConfigError);
}

TEST_CASE("out-of-range values name the key and the expected bounds") {
  nlohmann::json doc = preset_config("smoke");
  doc["city"]["occupancy_prob"] = 1.5;
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: 'city.occupancy_prob' out of range, expected [0, 1]",
                       ConfigError);

  doc = preset_config("smoke");
  doc["control"]["gamma"] = 1.5;
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: 'control.gamma' out of range, expected [-1, 1]",
                       ConfigError);

  doc = preset_config("smoke");
  doc["run"]["sims"] = 0;
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: 'run.sims' out of range, expected > 0", ConfigError);
}

TEST_CASE("type errors are reported per key") {
  nlohmann::json doc = preset_config("smoke");
  doc["city"]["n_spots"] = 2.5;
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: 'city.n_spots' must be an integer", ConfigError);

  doc = preset_config("smoke");
  doc["sensing"]["pedestrian_enabled"] = "yes";
  CHECK_THROWS_WITH_AS((void)parse_config(doc), "config: 'sensing.pedestrian_enabled' must be a boolean",
                       ConfigError);

  doc = preset_config("smoke");
  doc["control"]["filter"] = "median";
  CHECK_THROWS_AS((void)parse_config(doc), ConfigError);
}

TEST_CASE("overlays merge recursively and overrides win last") {
  nlohmann::json doc = preset_config("melbourne-scale");
  const nlohmann::json overlay = {{"control", {{"r_target", 100.0}}}, {"run", {{"sims", 7}}}};
  doc = merge_config(doc, overlay);
  CHECK(doc["control"]["r_target"] == 100.0);
  CHECK(doc["run"]["sims"] == 7);
  CHECK(doc["city"]["side_m"] == 6000.0);
  CHECK(doc["control"]["alpha"] == -4.01);

  apply_override(doc, "control.r_target=50");
  CHECK(doc["control"]["r_target"] == 50);
}

TEST_CASE("overrides parse JSON values and keep plain strings") {
  nlohmann::json doc = preset_config("smoke");
  apply_override(doc, "run.seed=123");
  CHECK(doc["run"]["seed"] == 123);
  apply_override(doc, "sensing.pedestrian_enabled=false");
  CHECK(doc["sensing"]["pedestrian_enabled"] == false);
  apply_override(doc, "control.filter=moving_average");
  CHECK(doc["control"]["filter"] == "moving_average");
  apply_override(doc, "city.side_m=2400");
  CHECK(doc["city"]["side_m"] == 2400);

  CHECK_THROWS_AS(apply_override(doc, "city.occupancy=0"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "city.no_such.deep=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "=5"), ConfigError);
}

TEST_CASE("canonical serialization is a fixed point") {
  const nlohmann::json doc = preset_config("smoke");
  const std::string dump = canonical_dump(doc);
  const nlohmann::json reparsed = nlohmann::json::parse(dump);
  CHECK(reparsed == doc);
  CHECK(canonical_dump(reparsed) == dump);
}

TEST_CASE("config hash is stable, sensitive, and hex-shaped") {
  const nlohmann::json doc = preset_config("melbourne-scale");
  const std::string h1 = config_hash(doc);
  const std::string h2 = config_hash(doc);
  CHECK(h1 == h2);
  REQUIRE(h1.size() == 16);
  for (char c : h1) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

  nlohmann::json changed = doc;
  changed["run"]["seed"] = 2;
  CHECK(config_hash(changed) != h1);
}

TEST_CASE("filter settings map onto the loop filter") {
  nlohmann::json doc = preset_config("smoke");
  doc["control"]["filter"] = "moving_average";
  doc["control"]["filter_window"] = 9;
  const ScenarioConfig sc = parse_config(doc);
  CHECK(sc.search.filter.kind == FilterSpec::Kind::moving_average);
  CHECK(sc.search.filter.window == 9);
}

TEST_CASE("scenario loading layers preset, file, then overrides") {
  const std::filesystem::path path = temp_file("crowdsense_test_overlay.json");
  {
    std::ofstream out(path);
    out << R"({"run": {"sims": 3}, "control": {"r_target": 90.0}})";
  }
  nlohmann::json effective;
  const ScenarioConfig sc = load_scenario("smoke", path.string(), {"run.seed=9"}, effective);
  CHECK(sc.preset == "smoke");
  CHECK(sc.sims == 3);
  CHECK(sc.seed == 9);
  CHECK(sc.search.r_target == 90.0);
  CHECK(effective["run"]["sims"] == 3);
  CHECK(effective["run"]["seed"] == 9);
  CHECK(effective["city"]["side_m"] == 1200.0);
  std::filesystem::remove(path);

  nlohmann::json ignored;
  CHECK_THROWS_AS((void)load_scenario("smoke", "/no/such/file.json", {}, ignored), ConfigError);

  const std::filesystem::path bad = temp_file("crowdsense_test_bad.json");
  {
    std::ofstream out(bad);
    out << "{not json";
  }
  CHECK_THROWS_AS((void)load_scenario("smoke", bad.string(), {}, ignored), ConfigError);
  std::filesystem::remove(bad);
}

TEST_CASE("manifest round-trips through json and disk") {
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.preset = "smoke";
  manifest.config_hash = "00ff00ff00ff00ff";
  manifest.master_seed = 42;
  manifest.sims = 2;
  manifest.jobs = 4;
  manifest.started_utc = "2026-01-02T03:04:05Z";
  manifest.finished_utc = "2026-01-02T03:09:05Z";
  manifest.outputs = {"campaign.csv", "manifest.json"};
  manifest.effective_config = preset_config("smoke");

  const nlohmann::json doc = manifest_to_json(manifest);
  const RunManifest back = manifest_from_json(doc);
  CHECK(back.artifact_version == manifest.artifact_version);
  CHECK(back.command == manifest.command);
  CHECK(back.preset == manifest.preset);
  CHECK(back.config_hash == manifest.config_hash);
  CHECK(back.master_seed == manifest.master_seed);
  CHECK(back.sims == manifest.sims);
  CHECK(back.jobs == manifest.jobs);
  CHECK(back.started_utc == manifest.started_utc);
  CHECK(back.finished_utc == manifest.finished_utc);
  CHECK(back.outputs == manifest.outputs);
  CHECK(back.effective_config == manifest.effective_config);

  const std::filesystem::path path = temp_file("crowdsense_test_manifest.json");
  write_manifest(path.string(), manifest);
  const RunManifest from_disk = read_manifest(path.string());
  CHECK(from_disk.config_hash == manifest.config_hash);
  CHECK(from_disk.effective_config == manifest.effective_config);
  std::filesystem::remove(path);
}

TEST_CASE("utc timestamps use a fixed format") {
  const std::string ts = utc_timestamp_now();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[7] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts[13] == ':');
  CHECK(ts[16] == ':');
  CHECK(ts[19] == 'Z');
}
