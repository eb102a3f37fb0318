#include "crowdsense/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "crowdsense/errors.hpp"

namespace crowdsense {

namespace {

nlohmann::json base_document() {
  return nlohmann::json{
      {"city",
       {{"side_m", 6000.0},
        {"street_spacing_m", 120.0},
        {"spot_spacing_m", 6.0},
        {"parked_segment_fraction", 0.3},
        {"n_spots", 24067},
        {"occupancy_prob", 0.5}}},
      {"behaviors",
       {{"slope", 3.0e-4},
        {"p_few", 0.9},
        {"p_some", 0.5},
        {"p_many", 0.2},
        {"t_few", 2},
        {"t_many", 8},
        {"probability_floor", 1.0e-3}}},
      {"sensing",
       {{"neighbor_radius_m", 20.0},
        {"rfid_radius_m", 6.0},
        {"pedestrian_enabled", true},
        {"ped_speed_mps", 1.39}}},
      {"control",
       {{"r_target", 7200.0},
        {"alpha", -4.01},
        {"gamma", 0.99},
        {"kappa", 0.1},
        {"pi_min", -10000.0},
        {"pi_max", 10000.0},
        {"control_period_s", 20},
        {"filter", "identity"},
        {"filter_window", 5}}},
      {"run",
       {{"timeout_s", 1800},
        {"tick_s", 1},
        {"initial_on_fraction", 0.3},
        {"sims", 100},
        {"jobs", 1},
        {"seed", 1}}}};
}

void require_object(const nlohmann::json& doc, const std::string& path) {
  if (!doc.is_object()) throw ConfigError("config: '" + path + "' must be an object");
}

double get_number(const nlohmann::json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("config: '" + path + "." + key + "' must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const nlohmann::json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError("config: '" + path + "." + key + "' must be an integer");
  return v.get<std::int64_t>();
}

bool get_bool(const nlohmann::json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError("config: '" + path + "." + key + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const nlohmann::json& obj, const std::string& path, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("config: '" + path + "." + key + "' must be a string");
  return v.get<std::string>();
}

void check_keys(const nlohmann::json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("config: unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    }
  }
}

void check_range(bool ok, const std::string& dotted, const std::string& bounds) {
  if (!ok) throw ConfigError("config: '" + dotted + "' out of range, expected " + bounds);
}

}  // namespace

std::vector<std::string> preset_names() { return {"melbourne-scale", "regulation-only", "smoke"}; }

nlohmann::json preset_config(const std::string& name) {
  nlohmann::json doc = base_document();
  if (name == "melbourne-scale") return doc;
  if (name == "regulation-only") {
    doc["sensing"]["pedestrian_enabled"] = false;
    doc["run"]["sims"] = 10;
    return doc;
  }
  if (name == "smoke") {
    doc["city"]["side_m"] = 1200.0;
    doc["city"]["n_spots"] = 600;
    doc["control"]["r_target"] = 180.0;
    doc["run"]["timeout_s"] = 300;
    doc["run"]["sims"] = 2;
    return doc;
  }
  throw ConfigError("config: unknown preset '" + name + "'; available: melbourne-scale, regulation-only, smoke");
}

nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay) {
  if (!overlay.is_object() || !base.is_object()) return overlay;
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key)) {
      base[key] = merge_config(base[key], value);
    } else {
      base[key] = value;
    }
  }
  return base;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("config: override '" + assignment + "' must have the form path.to.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    if (dot == std::string::npos) {
      parts.push_back(path.substr(start));
      break;
    }
    parts.push_back(path.substr(start, dot - start));
    start = dot + 1;
  }

  nlohmann::json* node = &doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) {
      throw ConfigError("config: override path '" + path + "' does not exist");
    }
    node = &(*node)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!node->is_object() || !node->contains(leaf)) {
    throw ConfigError("config: override path '" + path + "' does not exist");
  }

  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  (*node)[leaf] = value;
}

ScenarioConfig parse_config(const nlohmann::json& doc) {
  require_object(doc, "<root>");
  check_keys(doc, "", {"city", "behaviors", "sensing", "control", "run"});
  for (const char* section : {"city", "behaviors", "sensing", "control", "run"}) {
    if (!doc.contains(section)) throw ConfigError(std::string("config: missing section '") + section + "'");
    require_object(doc.at(section), section);
  }

  ScenarioConfig sc;
  SearchConfig& s = sc.search;

  {
    const auto& c = doc.at("city");
    check_keys(c, "city",
               {"side_m", "street_spacing_m", "spot_spacing_m", "parked_segment_fraction", "n_spots",
                "occupancy_prob"});
    s.city.side_m = get_number(c, "city", "side_m");
    s.city.street_spacing_m = get_number(c, "city", "street_spacing_m");
    s.city.spot_spacing_m = get_number(c, "city", "spot_spacing_m");
    s.city.parked_segment_fraction = get_number(c, "city", "parked_segment_fraction");
    const std::int64_t spots = get_integer(c, "city", "n_spots");
    check_range(spots > 0, "city.n_spots", "a positive integer");
    s.city.n_spots = static_cast<std::size_t>(spots);
    s.city.occupancy_prob = get_number(c, "city", "occupancy_prob");
    check_range(s.city.side_m > 0.0, "city.side_m", "> 0");
    check_range(s.city.street_spacing_m > 0.0, "city.street_spacing_m", "> 0");
    check_range(s.city.spot_spacing_m > 0.0, "city.spot_spacing_m", "> 0");
    check_range(s.city.parked_segment_fraction >= 0.0 && s.city.parked_segment_fraction <= 1.0,
                "city.parked_segment_fraction", "[0, 1]");
    check_range(s.city.occupancy_prob >= 0.0 && s.city.occupancy_prob <= 1.0, "city.occupancy_prob", "[0, 1]");
  }

  {
    const auto& b = doc.at("behaviors");
    check_keys(b, "behaviors", {"slope", "p_few", "p_some", "p_many", "t_few", "t_many", "probability_floor"});
    const double slope = get_number(b, "behaviors", "slope");
    const double p_few = get_number(b, "behaviors", "p_few");
    const double p_some = get_number(b, "behaviors", "p_some");
    const double p_many = get_number(b, "behaviors", "p_many");
    check_range(p_few > 0.0 && p_few < 1.0, "behaviors.p_few", "(0, 1)");
    check_range(p_some > 0.0 && p_some < 1.0, "behaviors.p_some", "(0, 1)");
    check_range(p_many > 0.0 && p_many < 1.0, "behaviors.p_many", "(0, 1)");
    s.behaviors.few = behavior_from_anchor(p_few, slope);
    s.behaviors.some = behavior_from_anchor(p_some, slope);
    s.behaviors.many = behavior_from_anchor(p_many, slope);
    const std::int64_t t_few = get_integer(b, "behaviors", "t_few");
    const std::int64_t t_many = get_integer(b, "behaviors", "t_many");
    check_range(t_few >= 0, "behaviors.t_few", ">= 0");
    check_range(t_many > t_few, "behaviors.t_many", "> t_few");
    s.behaviors.t_few = static_cast<int>(t_few);
    s.behaviors.t_many = static_cast<int>(t_many);
    s.behaviors.probability_floor = get_number(b, "behaviors", "probability_floor");
    check_range(s.behaviors.probability_floor > 0.0 && s.behaviors.probability_floor < 0.5,
                "behaviors.probability_floor", "(0, 0.5)");
  }

  {
    const auto& n = doc.at("sensing");
    check_keys(n, "sensing", {"neighbor_radius_m", "rfid_radius_m", "pedestrian_enabled", "ped_speed_mps"});
    s.neighbor_radius_m = get_number(n, "sensing", "neighbor_radius_m");
    s.rfid_radius_m = get_number(n, "sensing", "rfid_radius_m");
    s.pedestrian_enabled = get_bool(n, "sensing", "pedestrian_enabled");
    s.ped_speed_mps = get_number(n, "sensing", "ped_speed_mps");
    check_range(s.neighbor_radius_m > 0.0, "sensing.neighbor_radius_m", "> 0");
    check_range(s.rfid_radius_m > 0.0, "sensing.rfid_radius_m", "> 0");
    check_range(s.ped_speed_mps >= 0.0, "sensing.ped_speed_mps", ">= 0");
  }

  {
    const auto& c = doc.at("control");
    check_keys(c, "control",
               {"r_target", "alpha", "gamma", "kappa", "pi_min", "pi_max", "control_period_s", "filter",
                "filter_window"});
    s.r_target = get_number(c, "control", "r_target");
    s.controller_alpha = get_number(c, "control", "alpha");
    s.controller_gamma = get_number(c, "control", "gamma");
    s.controller_kappa = get_number(c, "control", "kappa");
    s.pi_min = get_number(c, "control", "pi_min");
    s.pi_max = get_number(c, "control", "pi_max");
    const std::int64_t period = get_integer(c, "control", "control_period_s");
    check_range(period > 0, "control.control_period_s", "> 0");
    s.control_period_s = static_cast<int>(period);
    check_range(s.r_target >= 0.0, "control.r_target", ">= 0");
    check_range(std::abs(s.controller_gamma) <= 1.0, "control.gamma", "[-1, 1]");
    check_range(s.pi_min < s.pi_max, "control.pi_min", "< control.pi_max");

    const std::string filter = get_string(c, "control", "filter");
    const std::int64_t window = get_integer(c, "control", "filter_window");
    check_range(window > 0, "control.filter_window", "> 0");
    if (filter == "identity") {
      s.filter.kind = FilterSpec::Kind::identity;
    } else if (filter == "moving_average") {
      s.filter.kind = FilterSpec::Kind::moving_average;
    } else {
      throw ConfigError("config: 'control.filter' must be \"identity\" or \"moving_average\"");
    }
    s.filter.window = static_cast<std::size_t>(window);
  }

  {
    const auto& r = doc.at("run");
    check_keys(r, "run", {"timeout_s", "tick_s", "initial_on_fraction", "sims", "jobs", "seed"});
    const std::int64_t timeout = get_integer(r, "run", "timeout_s");
    const std::int64_t tick = get_integer(r, "run", "tick_s");
    check_range(timeout > 0, "run.timeout_s", "> 0");
    check_range(tick > 0, "run.tick_s", "> 0");
    s.timeout_s = static_cast<int>(timeout);
    s.tick_s = static_cast<int>(tick);
    s.initial_on_fraction = get_number(r, "run", "initial_on_fraction");
    check_range(s.initial_on_fraction >= 0.0 && s.initial_on_fraction <= 1.0, "run.initial_on_fraction",
                "[0, 1]");
    const std::int64_t sims = get_integer(r, "run", "sims");
    check_range(sims > 0, "run.sims", "> 0");
    sc.sims = static_cast<std::size_t>(sims);
    const std::int64_t jobs = get_integer(r, "run", "jobs");
    check_range(jobs >= 0, "run.jobs", ">= 0 (0 = one worker per core)");
    sc.jobs = static_cast<unsigned>(jobs);
    const auto& seed = r.at("seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer())
      throw ConfigError("config: 'run.seed' must be an integer");
    const std::int64_t seed_i = seed.get<std::int64_t>();
    check_range(seed.is_number_unsigned() || seed_i >= 0, "run.seed", ">= 0");
    sc.seed = seed.get<std::uint64_t>();
  }

  validate_search_config(s);
  return sc;
}

ScenarioConfig load_scenario(const std::string& preset, const std::string& config_path,
                             const std::vector<std::string>& overrides, nlohmann::json& effective_doc) {
  nlohmann::json doc = preset_config(preset);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config: cannot open '" + config_path + "'");
    nlohmann::json overlay = nlohmann::json::parse(in, nullptr, false);
    if (overlay.is_discarded()) throw ConfigError("config: '" + config_path + "' is not valid JSON");
    doc = merge_config(std::move(doc), overlay);
  }
  for (const std::string& assignment : overrides) {
    apply_override(doc, assignment);
  }
  effective_doc = doc;
  ScenarioConfig sc = parse_config(doc);
  sc.preset = preset;
  return sc;
}

std::string canonical_dump(const nlohmann::json& doc) {
  // nlohmann::json already stores object keys sorted; a fixed dump format
  // makes the serialization canonical.
  return doc.dump(2);
}

std::string config_hash(const nlohmann::json& doc) {
  const std::string bytes = canonical_dump(doc);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace crowdsense
