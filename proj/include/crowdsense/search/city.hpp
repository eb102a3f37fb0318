#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "crowdsense/rng.hpp"

namespace crowdsense {

// Square street grid with equally spaced streets in both directions.
// A fraction of the street segments allow parking; parked spots sit at
// regular intervals strictly inside those segments, and a fixed number of
// spots is then selected evenly from the candidates.
struct GridCityConfig {
  double side_m = 6000.0;
  double street_spacing_m = 120.0;
  double spot_spacing_m = 6.0;
  double parked_segment_fraction = 0.3;
  std::size_t n_spots = 24067;
  double occupancy_prob = 0.5;
};

struct GridCity {
  GridCityConfig config;
  int nodes_per_side = 0;
  std::vector<double> spot_x;
  std::vector<double> spot_y;
  std::vector<std::uint8_t> occupied;
  std::size_t vehicle_count = 0;

  double node_coord(int idx) const { return idx * config.street_spacing_m; }
  double lattice_side_m() const { return (nodes_per_side - 1) * config.street_spacing_m; }
};

// Draw order is fixed: one uniform per segment to decide parking, then one
// uniform per selected spot to decide occupancy. Two cities built from the
// same stream state and configs that differ only in occupancy_prob therefore
// share geometry, and the higher-probability city occupies a superset of
// spots.
GridCity generate_city(const GridCityConfig& config, RngStream& rng);

void validate_city_config(const GridCityConfig& config);

}  // namespace crowdsense
