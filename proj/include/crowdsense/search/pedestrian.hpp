#pragma once

#include "crowdsense/rng.hpp"

namespace crowdsense {

// Random walk along the edges of a square lattice. The walker starts at a
// uniformly chosen position on a uniformly chosen edge, moves at constant
// speed, and at each node picks the next edge uniformly among those that do
// not immediately reverse direction.
class PedestrianWalk {
 public:
  PedestrianWalk(int nodes_per_side, double spacing_m, double speed_mps, RngStream& rng);

  void advance(double dt_s, RngStream& rng);

  double x() const;
  double y() const;
  double speed_mps() const { return speed_; }

 private:
  void arrive_and_turn(RngStream& rng);

  int n_;
  double spacing_;
  double speed_;
  int from_i_, from_j_;
  int to_i_, to_j_;
  double progress_m_;
};

}  // namespace crowdsense
