#include "crowdsense/search/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"
#include "crowdsense/search/pedestrian.hpp"
#include "crowdsense/search/spatial_hash.hpp"

namespace crowdsense {

namespace {

constexpr std::uint64_t kCityStream = 1;
constexpr std::uint64_t kPedestrianStream = 2;
constexpr std::uint64_t kInitialOnStream = 3;
constexpr std::uint64_t kVehicleStreamBase = 100;

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

void validate_search_config(const SearchConfig& config) {
  validate_city_config(config.city);
  validate_behavior_bank(config.behaviors);
  validate_floor(config.behaviors, config.pi_min, config.pi_max);
  if (!(config.neighbor_radius_m > 0.0)) throw ConfigError("search: neighbor_radius_m must be positive");
  if (!(config.rfid_radius_m > 0.0)) throw ConfigError("search: rfid_radius_m must be positive");
  if (!(config.initial_on_fraction >= 0.0 && config.initial_on_fraction <= 1.0))
    throw ConfigError("search: initial_on_fraction must lie in [0, 1]");
  if (!(config.r_target >= 0.0)) throw ConfigError("search: r_target must be nonnegative");
  if (!(config.pi_min < config.pi_max)) throw ConfigError("search: pi_min must be below pi_max");
  if (config.timeout_s <= 0) throw ConfigError("search: timeout_s must be positive");
  if (config.tick_s <= 0) throw ConfigError("search: tick_s must be positive");
  if (config.control_period_s <= 0) throw ConfigError("search: control_period_s must be positive");
  if (config.control_period_s % config.tick_s != 0)
    throw ConfigError("search: control_period_s must be a multiple of tick_s");
  if (!(config.ped_speed_mps >= 0.0)) throw ConfigError("search: ped_speed_mps must be nonnegative");
  if (std::abs(config.controller_gamma) > 1.0)
    throw ConfigError("search: controller_gamma must satisfy |gamma| <= 1");
}

SearchOutcome run_search(const SearchConfig& config, std::uint64_t seed) {
  validate_search_config(config);

  RngStream city_rng(seed, kCityStream);
  GridCity city = generate_city(config.city, city_rng);

  // Participating vehicles are the occupied spots. Each one keeps its own
  // stream keyed by spot index, so runs over the same city geometry draw
  // the same toss sequence per vehicle regardless of other settings.
  std::vector<std::uint32_t> vehicle_spot;
  vehicle_spot.reserve(city.vehicle_count);
  for (std::size_t s = 0; s < city.occupied.size(); ++s) {
    if (city.occupied[s]) vehicle_spot.push_back(static_cast<std::uint32_t>(s));
  }
  const std::size_t n_vehicles = vehicle_spot.size();

  std::vector<RngStream> vehicle_rng;
  vehicle_rng.reserve(n_vehicles);
  std::vector<double> vx(n_vehicles), vy(n_vehicles);
  for (std::size_t v = 0; v < n_vehicles; ++v) {
    const std::uint32_t s = vehicle_spot[v];
    vehicle_rng.emplace_back(seed, kVehicleStreamBase + s);
    vx[v] = city.spot_x[s];
    vy[v] = city.spot_y[s];
  }

  // Neighbor counts among participating vehicles, self excluded. The fleet
  // is fixed for the whole run, so counts are computed once.
  std::vector<int> neighbor_count(n_vehicles, 0);
  if (n_vehicles > 0) {
    SpatialHash2D hash(config.neighbor_radius_m);
    hash.build(vx, vy);
    for (std::size_t v = 0; v < n_vehicles; ++v) {
      int count = 0;
      hash.for_each_within(vx[v], vy[v], config.neighbor_radius_m,
                           [&](std::size_t u) { count += (u != v) ? 1 : 0; });
      neighbor_count[v] = count;
    }
  }

  // Initial on set: exactly round(fraction * participants) vehicles chosen
  // uniformly via a partial shuffle.
  std::vector<std::uint8_t> on(n_vehicles, 0);
  const std::size_t n_initial =
      static_cast<std::size_t>(std::llround(config.initial_on_fraction * static_cast<double>(n_vehicles)));
  {
    RngStream init_rng(seed, kInitialOnStream);
    std::vector<std::uint32_t> order(n_vehicles);
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t i = 0; i < n_initial && i < n_vehicles; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(init_rng.next_below(n_vehicles - i));
      std::swap(order[i], order[j]);
      on[order[i]] = 1;
    }
  }
  std::size_t n_on = std::min(n_initial, n_vehicles);

  RngStream ped_rng(seed, kPedestrianStream);
  std::optional<PedestrianWalk> walker;
  if (config.pedestrian_enabled) {
    walker.emplace(city.nodes_per_side, config.city.street_spacing_m, config.ped_speed_mps, ped_rng);
  }
  SpatialHash2D rfid_hash(config.rfid_radius_m);
  rfid_hash.build(vx, vy);

  ControllerState controller =
      make_controller(config.controller_alpha, config.controller_gamma, config.controller_kappa);
  std::vector<double> y_history;
  y_history.reserve(static_cast<std::size_t>(config.timeout_s / config.control_period_s) + 2);
  double current_pi = 0.0;

  SearchOutcome outcome;
  outcome.seed = seed;
  outcome.participants = n_vehicles;

  // Row 0 records the state after the initial broadcast of 0: the measured
  // count, its filtered value, and the resulting error.
  {
    const double y0 = static_cast<double>(n_on);
    y_history.push_back(y0);
    const double y_hat0 = filter_step(config.filter, y_history);
    outcome.loop.push(0, y0, y_hat0, config.r_target - y_hat0, current_pi);
    if (config.record_agent_states) outcome.agent_on.push_back(on);
  }

  auto pedestrian_detects = [&](double px, double py) {
    bool hit = false;
    rfid_hash.for_each_within(px, py, config.rfid_radius_m, [&](std::size_t v) {
      if (on[v]) hit = true;
    });
    return hit;
  };

  for (int t = config.tick_s; t <= config.timeout_s; t += config.tick_s) {
    if (walker) {
      walker->advance(static_cast<double>(config.tick_s), ped_rng);
      if (pedestrian_detects(walker->x(), walker->y())) {
        outcome.detected = true;
        outcome.detection_time_s = static_cast<double>(t);
        return outcome;
      }
    }

    if (t % config.control_period_s == 0) {
      // Round boundary: vehicles toss under the broadcast in force, the
      // regulator observes the new count, then updates the broadcast.
      std::size_t count_on = 0;
      for (std::size_t v = 0; v < n_vehicles; ++v) {
        const bool next_on =
            classify_and_toss(config.behaviors, neighbor_count[v], current_pi, vehicle_rng[v]);
        on[v] = next_on ? 1 : 0;
        count_on += next_on ? 1 : 0;
      }
      n_on = count_on;
      const double y = static_cast<double>(n_on);
      y_history.push_back(y);
      const double y_hat = filter_step(config.filter, y_history);
      const double e = config.r_target - y_hat;
      current_pi = controller_step_clamped(controller, e, config.pi_min, config.pi_max);
      outcome.loop.push(t, y, y_hat, e, current_pi);
      if (config.record_agent_states) outcome.agent_on.push_back(on);
    }
  }

  outcome.detected = false;
  outcome.detection_time_s = quiet_nan();
  return outcome;
}

CampaignResult run_campaign(const SearchConfig& config, std::uint64_t master_seed, std::size_t n_sims,
                            unsigned jobs, bool keep_loops,
                            const std::function<void(std::size_t, const SearchOutcome&)>& on_outcome) {
  validate_search_config(config);
  if (n_sims == 0) throw ValidationError("run_campaign: n_sims must be positive");

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(std::max(1u, jobs), static_cast<unsigned>(std::min<std::size_t>(hw, n_sims)));

  CampaignResult result;
  result.rows.resize(n_sims);
  if (keep_loops) result.loops.resize(n_sims);

  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    SearchOutcome out = run_search(config, seed);
    CampaignRow row;
    row.sim_id = i;
    row.seed = seed;
    row.detected = out.detected;
    row.detection_time_s = out.detection_time_s;
    result.rows[i] = row;
    if (on_outcome) on_outcome(i, out);
    if (keep_loops) result.loops[i] = std::move(out.loop);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < n_sims; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n_sims || failed.load()) return;
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            failed.store(true);
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  CampaignSummary& s = result.summary;
  s.sims = n_sims;
  std::vector<double> detected_times;
  detected_times.reserve(n_sims);
  for (const CampaignRow& row : result.rows) {
    if (row.detected) {
      detected_times.push_back(row.detection_time_s);
    } else {
      ++s.failures;
    }
  }
  s.failure_rate = static_cast<double>(s.failures) / static_cast<double>(n_sims);

  if (detected_times.empty()) {
    s.mean_detection_s = quiet_nan();
    s.ci95_lo = quiet_nan();
    s.ci95_hi = quiet_nan();
    return result;
  }

  s.mean_detection_s = std::accumulate(detected_times.begin(), detected_times.end(), 0.0) /
                       static_cast<double>(detected_times.size());

  // Percentile bootstrap of the mean detection time over the detected runs.
  RngStream boot_rng(master_seed, 999);
  std::vector<double> means(s.bootstrap_resamples);
  for (std::size_t b = 0; b < s.bootstrap_resamples; ++b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < detected_times.size(); ++k) {
      sum += detected_times[static_cast<std::size_t>(boot_rng.next_below(detected_times.size()))];
    }
    means[b] = sum / static_cast<double>(detected_times.size());
  }
  std::sort(means.begin(), means.end());
  const auto pick = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return (1.0 - f) * means[lo] + f * means[hi];
  };
  s.ci95_lo = pick(0.025);
  s.ci95_hi = pick(0.975);
  return result;
}

void write_campaign_csv(std::ostream& out, const CampaignResult& result) {
  out << "# schema: campaign/v1\n";
  out << "sim_id,seed,detected,detection_time_s\n";
  for (const CampaignRow& row : result.rows) {
    out << format_u64(row.sim_id) << ',' << format_u64(row.seed) << ',' << (row.detected ? '1' : '0') << ',';
    if (row.detected) out << format_double(row.detection_time_s);
    out << '\n';
  }
  const CampaignSummary& s = result.summary;
  out << "# summary: sims=" << format_u64(s.sims) << " failures=" << format_u64(s.failures)
      << " failure_rate=" << format_double(s.failure_rate);
  if (s.sims > s.failures) {
    out << " mean_detection_s=" << format_double(s.mean_detection_s)
        << " ci95_lo=" << format_double(s.ci95_lo) << " ci95_hi=" << format_double(s.ci95_hi)
        << " resamples=" << format_u64(s.bootstrap_resamples);
  }
  out << '\n';
}

CampaignResult read_campaign_csv(std::istream& in) {
  CsvTable table = read_csv(in);
  const std::vector<std::string> expected = {"sim_id", "seed", "detected", "detection_time_s"};
  if (table.header != expected) throw ConfigError("campaign csv: unexpected header");

  CampaignResult result;
  result.rows.reserve(table.rows.size());
  for (const auto& fields : table.rows) {
    if (fields.size() != 4) throw ConfigError("campaign csv: row has wrong field count");
    CampaignRow row;
    row.sim_id = static_cast<std::size_t>(parse_u64(fields[0]));
    row.seed = parse_u64(fields[1]);
    row.detected = parse_u64(fields[2]) != 0;
    row.detection_time_s = fields[3].empty() ? quiet_nan() : parse_double(fields[3]);
    result.rows.push_back(row);
  }

  CampaignSummary& s = result.summary;
  s.sims = result.rows.size();
  s.failures = 0;
  double sum = 0.0;
  std::size_t detected = 0;
  for (const CampaignRow& row : result.rows) {
    if (row.detected) {
      sum += row.detection_time_s;
      ++detected;
    } else {
      ++s.failures;
    }
  }
  s.failure_rate = s.sims == 0 ? 0.0 : static_cast<double>(s.failures) / static_cast<double>(s.sims);
  s.mean_detection_s = detected == 0 ? quiet_nan() : sum / static_cast<double>(detected);
  s.ci95_lo = quiet_nan();
  s.ci95_hi = quiet_nan();
  return result;
}

}  // namespace crowdsense
