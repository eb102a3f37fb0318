#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "crowdsense/control.hpp"
#include "crowdsense/search/behavior.hpp"
#include "crowdsense/search/city.hpp"

namespace crowdsense {

// Full configuration for one search run: the city, the behavior bank, the
// sensing geometry, and the regulation loop.
struct SearchConfig {
  GridCityConfig city;
  BehaviorBank behaviors;
  double neighbor_radius_m = 20.0;
  double rfid_radius_m = 6.0;
  double initial_on_fraction = 0.3;
  double r_target = 7200.0;
  double controller_alpha = -4.01;
  double controller_gamma = 0.99;
  double controller_kappa = 0.1;
  FilterSpec filter;
  double pi_min = -10000.0;
  double pi_max = 10000.0;
  int timeout_s = 1800;
  int tick_s = 1;
  int control_period_s = 20;
  bool pedestrian_enabled = true;
  double ped_speed_mps = 1.39;
  bool record_agent_states = false;
};

void validate_search_config(const SearchConfig& config);

struct SearchOutcome {
  bool detected = false;
  double detection_time_s = 0.0;
  std::size_t participants = 0;
  std::uint64_t seed = 0;
  LoopRecord loop;
  // Per-vehicle on/off state at each loop row, filled only when
  // record_agent_states was set: agent_on[row][vehicle].
  std::vector<std::vector<std::uint8_t>> agent_on;
};

// Runs one search to detection or timeout. All randomness derives from the
// given seed, so equal (config, seed) pairs give identical outcomes.
SearchOutcome run_search(const SearchConfig& config, std::uint64_t seed);

struct CampaignRow {
  std::size_t sim_id = 0;
  std::uint64_t seed = 0;
  bool detected = false;
  double detection_time_s = 0.0;
};

struct CampaignSummary {
  std::size_t sims = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  double mean_detection_s = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
  std::size_t bootstrap_resamples = 200;
};

struct CampaignResult {
  std::vector<CampaignRow> rows;
  CampaignSummary summary;
  std::vector<LoopRecord> loops;  // filled only when keep_loops was set
};

// Runs n_sims independent searches. Simulation i uses seed
// derive_seed(master_seed, i), so results do not depend on the number of
// worker threads; rows come back ordered by sim_id. When on_outcome is set
// it is called once per finished simulation, possibly from worker threads
// but never twice for the same sim_id.
CampaignResult run_campaign(const SearchConfig& config, std::uint64_t master_seed, std::size_t n_sims,
                            unsigned jobs = 1, bool keep_loops = false,
                            const std::function<void(std::size_t, const SearchOutcome&)>& on_outcome = {});

void write_campaign_csv(std::ostream& out, const CampaignResult& result);
CampaignResult read_campaign_csv(std::istream& in);

}  // namespace crowdsense
