#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "crowdsense/norms.hpp"
#include "crowdsense/rng.hpp"

namespace crowdsense {

// Cumulative means a(k) = (x_1 + ... + x_k) / k.
std::vector<double> running_average(std::span<const double> xs);

// Long-run average per agent with an uncertainty half-width.
struct PredictabilityVector {
  std::vector<double> r_bar;
  std::vector<double> ci_halfwidth;
};

// Post-burn-in mean of each agent's series. The half-width is a bootstrap
// standard error over batch means (the series are autocorrelated, so plain
// iid bootstrap would understate it); agents with fewer than two batches get
// half-width 0.
PredictabilityVector per_agent_averages(const std::vector<std::vector<double>>& series, std::size_t burn_in,
                                        std::size_t bootstrap_resamples, RngStream& rng);

struct PredictabilityReport {
  PredictabilityVector pooled;  // mean over runs; half-width = half the range across runs
  double max_spread;            // max over agents of (max - min) across runs
};

// Initial-condition independence: one PredictabilityVector per run, each
// from a different initial condition; all runs must have the same agent
// count. A small max_spread certifies that long-run averages do not depend
// on where the population started.
PredictabilityReport predictability_report(const std::vector<PredictabilityVector>& per_run);

// || r_bar - r * 1 || in the chosen norm.
double fairness_gap(std::span<const double> r_bar, double r, Norm norm = Norm::max);

struct FairnessVerdict {
  double gap;
  double epsilon;
  bool fair;
  Norm norm;
  double r;
};

FairnessVerdict epsilon_fairness(std::span<const double> r_bar, double r, double epsilon, Norm norm = Norm::max);

// Piecewise analysis for runs whose dynamics change at known boundaries.
struct SegmentFairnessReport {
  std::size_t segment_index;
  std::size_t start;
  std::size_t length;
  PredictabilityVector averages;
  // Set when the segment is too short to discard the burn-in; averages are
  // then computed on whatever data there is and should be read with care.
  bool short_segment;
};

// boundaries hold each segment's first time index; the first must be 0 and
// they must increase strictly. Burn-in is discarded again at every segment
// start (the population needs time to settle into the new regime).
std::vector<SegmentFairnessReport> segment_fairness(const std::vector<std::vector<double>>& series,
                                                    std::span<const std::size_t> boundaries, std::size_t burn_in,
                                                    std::size_t bootstrap_resamples, RngStream& rng);

struct FairnessCsvRow {
  std::size_t agent_id;
  double r_bar;
  double ci_halfwidth;
  std::size_t segment;
};

// Columns agent_id,r_bar,ci_halfwidth,segment plus an optional trailing
// summary comment with the verdict.
void write_fairness_csv(std::ostream& out, std::span<const FairnessCsvRow> rows,
                        const std::optional<FairnessVerdict>& verdict);
std::pair<std::vector<FairnessCsvRow>, std::optional<FairnessVerdict>> read_fairness_csv(std::istream& in);

}  // namespace crowdsense
