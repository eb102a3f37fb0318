#include "crowdsense/search/city.hpp"

#include <cmath>
#include <string>

#include "crowdsense/errors.hpp"

namespace crowdsense {

void validate_city_config(const GridCityConfig& config) {
  if (!(config.side_m > 0.0)) throw ConfigError("city: side_m must be positive");
  if (!(config.street_spacing_m > 0.0)) throw ConfigError("city: street_spacing_m must be positive");
  if (!(config.street_spacing_m <= config.side_m))
    throw ConfigError("city: street_spacing_m must not exceed side_m");
  if (!(config.spot_spacing_m > 0.0)) throw ConfigError("city: spot_spacing_m must be positive");
  if (!(config.spot_spacing_m < config.street_spacing_m))
    throw ConfigError("city: spot_spacing_m must be smaller than street_spacing_m");
  if (!(config.parked_segment_fraction >= 0.0 && config.parked_segment_fraction <= 1.0))
    throw ConfigError("city: parked_segment_fraction must lie in [0, 1]");
  if (!(config.occupancy_prob >= 0.0 && config.occupancy_prob <= 1.0))
    throw ConfigError("city: occupancy_prob must lie in [0, 1]");
  if (config.n_spots == 0) throw ConfigError("city: n_spots must be positive");
}

GridCity generate_city(const GridCityConfig& config, RngStream& rng) {
  validate_city_config(config);

  GridCity city;
  city.config = config;
  city.nodes_per_side = static_cast<int>(std::floor(config.side_m / config.street_spacing_m)) + 1;
  const int n = city.nodes_per_side;
  const double spacing = config.street_spacing_m;

  // Segments in a fixed order: all horizontal ones row by row, then all
  // vertical ones column by column.
  struct Segment {
    double x0, y0;
    double dx, dy;
  };
  std::vector<Segment> parked;
  const std::size_t total_segments = 2ull * static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1);
  parked.reserve(static_cast<std::size_t>(config.parked_segment_fraction * static_cast<double>(total_segments)) + 16);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const bool p = rng.next_unit() < config.parked_segment_fraction;
      if (p) parked.push_back({i * spacing, j * spacing, 1.0, 0.0});
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j + 1 < n; ++j) {
      const bool p = rng.next_unit() < config.parked_segment_fraction;
      if (p) parked.push_back({i * spacing, j * spacing, 0.0, 1.0});
    }
  }

  // Candidate spots strictly inside each parked segment.
  const int per_segment = static_cast<int>(std::floor(spacing / config.spot_spacing_m)) - 1;
  std::vector<double> cand_x;
  std::vector<double> cand_y;
  cand_x.reserve(parked.size() * static_cast<std::size_t>(per_segment > 0 ? per_segment : 0));
  cand_y.reserve(cand_x.capacity());
  for (const Segment& s : parked) {
    for (int k = 1; k <= per_segment; ++k) {
      const double d = k * config.spot_spacing_m;
      cand_x.push_back(s.x0 + s.dx * d);
      cand_y.push_back(s.y0 + s.dy * d);
    }
  }

  const std::size_t candidates = cand_x.size();
  if (candidates < config.n_spots) {
    throw ConfigError("city: only " + std::to_string(candidates) + " candidate spots for n_spots=" +
                      std::to_string(config.n_spots) +
                      "; increase side_m or parked_segment_fraction, or reduce spot_spacing_m");
  }

  // Evenly strided selection of exactly n_spots candidates. The indices
  // floor(i * candidates / n_spots) are strictly increasing because
  // candidates >= n_spots.
  city.spot_x.resize(config.n_spots);
  city.spot_y.resize(config.n_spots);
  for (std::size_t i = 0; i < config.n_spots; ++i) {
    const std::size_t idx = (i * candidates) / config.n_spots;
    city.spot_x[i] = cand_x[idx];
    city.spot_y[i] = cand_y[idx];
  }

  city.occupied.resize(config.n_spots);
  city.vehicle_count = 0;
  for (std::size_t i = 0; i < config.n_spots; ++i) {
    const bool occ = rng.next_unit() < config.occupancy_prob;
    city.occupied[i] = occ ? 1 : 0;
    if (occ) ++city.vehicle_count;
  }
  return city;
}

}  // namespace crowdsense
