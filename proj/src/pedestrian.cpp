#include "crowdsense/search/pedestrian.hpp"

#include <array>
#include <cstdint>
#include <utility>

#include "crowdsense/errors.hpp"

namespace crowdsense {

PedestrianWalk::PedestrianWalk(int nodes_per_side, double spacing_m, double speed_mps, RngStream& rng)
    : n_(nodes_per_side), spacing_(spacing_m), speed_(speed_mps) {
  if (n_ < 2) throw ValidationError("pedestrian: lattice needs at least 2 nodes per side");
  if (!(spacing_ > 0.0)) throw ValidationError("pedestrian: spacing must be positive");
  if (!(speed_ >= 0.0)) throw ValidationError("pedestrian: speed must be nonnegative");

  // Uniform edge: horizontal edges first (n rows of n-1), then vertical.
  const std::uint64_t per_dir = static_cast<std::uint64_t>(n_) * static_cast<std::uint64_t>(n_ - 1);
  const std::uint64_t e = rng.next_below(2 * per_dir);
  if (e < per_dir) {
    const int j = static_cast<int>(e / static_cast<std::uint64_t>(n_ - 1));
    const int i = static_cast<int>(e % static_cast<std::uint64_t>(n_ - 1));
    from_i_ = i;
    from_j_ = j;
    to_i_ = i + 1;
    to_j_ = j;
  } else {
    const std::uint64_t v = e - per_dir;
    const int i = static_cast<int>(v / static_cast<std::uint64_t>(n_ - 1));
    const int j = static_cast<int>(v % static_cast<std::uint64_t>(n_ - 1));
    from_i_ = i;
    from_j_ = j;
    to_i_ = i;
    to_j_ = j + 1;
  }
  if (rng.next_unit() < 0.5) {
    std::swap(from_i_, to_i_);
    std::swap(from_j_, to_j_);
  }
  progress_m_ = rng.next_unit() * spacing_;
}

double PedestrianWalk::x() const {
  const double t = progress_m_ / spacing_;
  return ((1.0 - t) * from_i_ + t * to_i_) * spacing_;
}

double PedestrianWalk::y() const {
  const double t = progress_m_ / spacing_;
  return ((1.0 - t) * from_j_ + t * to_j_) * spacing_;
}

void PedestrianWalk::advance(double dt_s, RngStream& rng) {
  if (!(dt_s >= 0.0)) throw ValidationError("pedestrian: time step must be nonnegative");
  double dist = speed_ * dt_s;
  while (dist > 0.0) {
    const double remaining = spacing_ - progress_m_;
    if (dist < remaining) {
      progress_m_ += dist;
      return;
    }
    dist -= remaining;
    arrive_and_turn(rng);
  }
}

void PedestrianWalk::arrive_and_turn(RngStream& rng) {
  const int here_i = to_i_;
  const int here_j = to_j_;
  const int back_i = from_i_;
  const int back_j = from_j_;

  std::array<std::pair<int, int>, 4> options{};
  std::size_t count = 0;
  const std::pair<int, int> deltas[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const auto& [di, dj] : deltas) {
    const int ni = here_i + di;
    const int nj = here_j + dj;
    if (ni < 0 || ni >= n_ || nj < 0 || nj >= n_) continue;
    if (ni == back_i && nj == back_j) continue;
    options[count++] = {ni, nj};
  }
  // Every lattice node has degree at least 2, so excluding the arrival edge
  // leaves at least one option.
  const std::size_t pick = count == 1 ? 0 : static_cast<std::size_t>(rng.next_below(count));
  from_i_ = here_i;
  from_j_ = here_j;
  to_i_ = options[pick].first;
  to_j_ = options[pick].second;
  progress_m_ = 0.0;
}

}  // namespace crowdsense
