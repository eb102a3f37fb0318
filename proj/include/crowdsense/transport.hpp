#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <vector>

namespace crowdsense {

struct TransportPlanEntry {
  std::size_t from;
  std::size_t to;
  double mass;
};

struct TransportResult {
  double cost;
  // Positive-mass entries of the optimal plan, sorted by (from, to).
  std::vector<TransportPlanEntry> plan;
  // Optimal dual potentials: dual_supply[i] + dual_demand[j] <= cost(i,j)
  // up to round-off, with equality on plan entries. Their weighted sum
  // equals the primal cost (strong duality), which tests verify.
  std::vector<double> dual_supply;
  std::vector<double> dual_demand;
  std::size_t pivots;
};

// Exact balanced transportation problem
//   min sum_ij cost(i,j) f_ij,  sum_j f_ij = supply_i,  sum_i f_ij = demand_j,
// solved with the transportation simplex (northwest-corner start, most
// negative reduced cost pricing with a first-index fallback against
// degenerate cycling). Supplies and demands must be nonnegative with equal
// totals within 1e-9.
TransportResult solve_transport(const Eigen::MatrixXd& cost, std::span<const double> supply,
                                std::span<const double> demand);

}  // namespace crowdsense
