#pragma once

#include <cmath>
#include <string>

#include "crowdsense/errors.hpp"
#include "crowdsense/rng.hpp"

namespace crowdsense {

// Probability of switching on as a logistic function of the broadcast value.
// The offset fixes the probability at broadcast 0; the slope is shared so
// the three curves keep their ordering for every broadcast.
struct LogisticBehavior {
  double slope = 0.0;
  double offset = 0.0;

  double p_on(double pi) const { return 1.0 / (1.0 + std::exp(-(slope * pi + offset))); }
};

inline LogisticBehavior behavior_from_anchor(double p_at_zero, double slope) {
  if (!(p_at_zero > 0.0 && p_at_zero < 1.0))
    throw ValidationError("behavior_from_anchor: anchor probability must lie in (0, 1)");
  return LogisticBehavior{slope, std::log(p_at_zero / (1.0 - p_at_zero))};
}

// Three behavior classes keyed to the local density of participating
// vehicles: isolated vehicles respond eagerly, crowded ones hold back.
struct BehaviorBank {
  LogisticBehavior few;
  LogisticBehavior some;
  LogisticBehavior many;
  int t_few = 2;
  int t_many = 8;
  double probability_floor = 1e-3;

  const LogisticBehavior& classify(int neighbor_count) const {
    if (neighbor_count <= t_few) return few;
    if (neighbor_count >= t_many) return many;
    return some;
  }
};

inline BehaviorBank default_behaviors() {
  BehaviorBank bank;
  const double slope = 3.0e-4;
  bank.few = behavior_from_anchor(0.9, slope);
  bank.some = behavior_from_anchor(0.5, slope);
  bank.many = behavior_from_anchor(0.2, slope);
  return bank;
}

inline void validate_behavior_bank(const BehaviorBank& bank) {
  if (!(bank.t_few < bank.t_many)) throw ValidationError("behaviors: t_few must be smaller than t_many");
  if (bank.t_few < 0) throw ValidationError("behaviors: t_few must be nonnegative");
  if (!(bank.probability_floor > 0.0 && bank.probability_floor < 0.5))
    throw ValidationError("behaviors: probability_floor must lie in (0, 0.5)");
}

// Checks that every behavior keeps its on-probability inside
// [floor, 1 - floor] across the whole broadcast interval. Each logistic is
// monotone in the broadcast, so the two endpoints suffice.
inline void validate_floor(const BehaviorBank& bank, double pi_min, double pi_max) {
  validate_behavior_bank(bank);
  if (!(pi_min <= pi_max)) throw ValidationError("behaviors: broadcast interval is empty");
  const LogisticBehavior* all[] = {&bank.few, &bank.some, &bank.many};
  const char* names[] = {"few", "some", "many"};
  for (int i = 0; i < 3; ++i) {
    for (double pi : {pi_min, pi_max}) {
      const double p = all[i]->p_on(pi);
      if (!(p >= bank.probability_floor && p <= 1.0 - bank.probability_floor)) {
        throw ValidationError(std::string("behaviors: class '") + names[i] +
                              "' leaves the probability floor at broadcast " + std::to_string(pi));
      }
    }
  }
}

// One on/off draw. Switching on with probability p is the two-map choice
// {x -> 1 with weight p, x -> 0 with weight 1 - p}: the draw lands in the
// first bin exactly when q < p.
inline bool toss(const LogisticBehavior& behavior, double pi, double floor_p, RngStream& rng) {
  const double p = behavior.p_on(pi);
  if (!(p >= floor_p && p <= 1.0 - floor_p))
    throw ValidationError("toss: on-probability " + std::to_string(p) + " violates the floor " +
                          std::to_string(floor_p));
  return rng.next_unit() < p;
}

inline bool classify_and_toss(const BehaviorBank& bank, int neighbor_count, double pi, RngStream& rng) {
  return toss(bank.classify(neighbor_count), pi, bank.probability_floor, rng);
}

}  // namespace crowdsense
