#include "crowdsense/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <utility>

#include "crowdsense/errors.hpp"

namespace crowdsense {
namespace {

struct BasicCell {
  std::size_t i;
  std::size_t j;
  double flow;
};

// Spanning-tree basis over the bipartite node set: rows are nodes
// 0..n-1, columns are nodes n..n+m-1.
class Basis {
 public:
  Basis(std::size_t n, std::size_t m) : n_(n), m_(m), adjacency_(n + m) {}

  void add(BasicCell cell) {
    cells_.push_back(cell);
    rebuild_adjacency();
  }

  void replace(std::size_t leaving_pos, BasicCell entering) {
    cells_[leaving_pos] = entering;
    rebuild_adjacency();
  }

  std::vector<BasicCell>& cells() { return cells_; }
  const std::vector<BasicCell>& cells() const { return cells_; }

  // Potentials u (rows) and v (columns) with u[0] = 0 and
  // u_i + v_j = cost(i,j) on every basic cell.
  void potentials(const Eigen::MatrixXd& cost, std::vector<double>& u, std::vector<double>& v) const {
    u.assign(n_, 0.0);
    v.assign(m_, 0.0);
    std::vector<char> known(n_ + m_, 0);
    known[0] = 1;
    std::deque<std::size_t> queue = {0};
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t cell_idx : adjacency_[node]) {
        const BasicCell& cell = cells_[cell_idx];
        const std::size_t other = node < n_ ? n_ + cell.j : cell.i;
        if (known[other]) continue;
        known[other] = 1;
        if (other >= n_) {
          v[cell.j] = cost(cell.i, cell.j) - u[cell.i];
        } else {
          u[cell.i] = cost(cell.i, cell.j) - v[cell.j];
        }
        queue.push_back(other);
      }
    }
    for (char k : known) {
      if (!k) throw NumericError("transport: basis tree is disconnected");
    }
  }

  // Tree path from row node `from_row` to column node `to_col`, returned as
  // the basic-cell positions along the path.
  std::vector<std::size_t> path(std::size_t from_row, std::size_t to_col) const {
    const std::size_t start = from_row;
    const std::size_t goal = n_ + to_col;
    std::vector<std::int64_t> parent_cell(n_ + m_, -1);
    std::vector<std::int64_t> parent_node(n_ + m_, -1);
    std::vector<char> seen(n_ + m_, 0);
    seen[start] = 1;
    std::deque<std::size_t> queue = {start};
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      if (node == goal) break;
      for (std::size_t cell_idx : adjacency_[node]) {
        const BasicCell& cell = cells_[cell_idx];
        const std::size_t other = node < n_ ? n_ + cell.j : cell.i;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = static_cast<std::int64_t>(cell_idx);
        parent_node[other] = static_cast<std::int64_t>(node);
        queue.push_back(other);
      }
    }
    if (!seen[goal]) throw NumericError("transport: no tree path between pivot endpoints");
    std::vector<std::size_t> cells_on_path;
    std::size_t node = goal;
    while (node != start) {
      cells_on_path.push_back(static_cast<std::size_t>(parent_cell[node]));
      node = static_cast<std::size_t>(parent_node[node]);
    }
    std::reverse(cells_on_path.begin(), cells_on_path.end());
    return cells_on_path;
  }

 private:
  void rebuild_adjacency() {
    for (auto& list : adjacency_) list.clear();
    for (std::size_t idx = 0; idx < cells_.size(); ++idx) {
      adjacency_[cells_[idx].i].push_back(idx);
      adjacency_[n_ + cells_[idx].j].push_back(idx);
    }
  }

  std::size_t n_;
  std::size_t m_;
  std::vector<BasicCell> cells_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

}  // namespace

TransportResult solve_transport(const Eigen::MatrixXd& cost, std::span<const double> supply,
                                std::span<const double> demand) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  if (n == 0 || m == 0) throw ValidationError("transport: supply and demand must be non-empty");
  if (cost.rows() != static_cast<Eigen::Index>(n) || cost.cols() != static_cast<Eigen::Index>(m)) {
    throw ValidationError("transport: cost matrix shape does not match supply/demand sizes");
  }
  double total_supply = 0.0;
  double total_demand = 0.0;
  for (double s : supply) {
    if (!(s >= 0.0)) throw ValidationError("transport: supplies must be nonnegative");
    total_supply += s;
  }
  for (double d : demand) {
    if (!(d >= 0.0)) throw ValidationError("transport: demands must be nonnegative");
    total_demand += d;
  }
  if (std::abs(total_supply - total_demand) > 1e-9 * (1.0 + std::abs(total_supply))) {
    throw ValidationError("transport: supply total " + std::to_string(total_supply) +
                          " does not balance demand total " + std::to_string(total_demand));
  }

  // Northwest-corner starting basis: exactly n + m - 1 cells, including
  // zero-flow cells on degenerate steps.
  Basis basis(n, m);
  {
    std::vector<double> ra(supply.begin(), supply.end());
    std::vector<double> rb(demand.begin(), demand.end());
    std::size_t i = 0;
    std::size_t j = 0;
    while (true) {
      const double flow = std::min(ra[i], rb[j]);
      basis.add(BasicCell{i, j, flow});
      ra[i] -= flow;
      rb[j] -= flow;
      if (i == n - 1 && j == m - 1) break;
      if (ra[i] <= 0.0 && i < n - 1) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  const double cost_scale = 1.0 + cost.cwiseAbs().maxCoeff();
  const double eps = 1e-12 * cost_scale;
  // Generous cap: transportation pivots are typically O(n + m). The
  // first-index (Bland style) fallback after a long degenerate streak rules
  // out cycling, so hitting the cap indicates a genuine defect.
  const std::size_t max_pivots = 10000 + 200 * (n + m);
  std::size_t degenerate_streak = 0;
  std::vector<double> u;
  std::vector<double> v;
  std::size_t pivots = 0;

  while (true) {
    basis.potentials(cost, u, v);

    std::size_t best_i = 0;
    std::size_t best_j = 0;
    double best_rc = -eps;
    bool found = false;
    const bool first_index_rule = degenerate_streak > n + m;
    for (std::size_t i = 0; i < n && !(found && first_index_rule); ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double rc = cost(i, j) - u[i] - v[j];
        if (rc < best_rc) {
          best_rc = rc;
          best_i = i;
          best_j = j;
          found = true;
          if (first_index_rule) break;
        }
      }
    }
    if (!found) break;

    if (++pivots > max_pivots) throw NumericError("transport: pivot limit exceeded");

    // The entering cell closes one cycle with the tree path between its
    // endpoints. Flow alternates +/- along the cycle starting with + on the
    // entering cell, so path cells at even positions lose flow.
    const std::vector<std::size_t> path = basis.path(best_i, best_j);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving_pos = path[0];
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const double flow = basis.cells()[path[k]].flow;
      const bool tie_break = first_index_rule && flow == theta &&
                             std::make_pair(basis.cells()[path[k]].i, basis.cells()[path[k]].j) <
                                 std::make_pair(basis.cells()[leaving_pos].i, basis.cells()[leaving_pos].j);
      if (flow < theta || tie_break) {
        theta = flow;
        leaving_pos = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      basis.cells()[path[k]].flow += (k % 2 == 0) ? -theta : theta;
    }
    basis.cells()[leaving_pos].flow = 0.0;
    basis.replace(leaving_pos, BasicCell{best_i, best_j, theta});
    degenerate_streak = theta == 0.0 ? degenerate_streak + 1 : 0;
  }

  TransportResult result;
  result.pivots = pivots;
  result.dual_supply = std::move(u);
  result.dual_demand = std::move(v);
  result.cost = 0.0;
  for (const BasicCell& cell : basis.cells()) {
    result.cost += cell.flow * cost(cell.i, cell.j);
    if (cell.flow > 0.0) result.plan.push_back(TransportPlanEntry{cell.i, cell.j, cell.flow});
  }
  std::sort(result.plan.begin(), result.plan.end(), [](const TransportPlanEntry& a, const TransportPlanEntry& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });

  // Marginal check: the recovered plan must reproduce the inputs.
  std::vector<double> row_sum(n, 0.0);
  std::vector<double> col_sum(m, 0.0);
  for (const BasicCell& cell : basis.cells()) {
    row_sum[cell.i] += cell.flow;
    col_sum[cell.j] += cell.flow;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(row_sum[i] - supply[i]) > 1e-9 * (1.0 + std::abs(supply[i]))) {
      throw NumericError("transport: plan row marginal drifted from the supply vector");
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(col_sum[j] - demand[j]) > 1e-9 * (1.0 + std::abs(demand[j]))) {
      throw NumericError("transport: plan column marginal drifted from the demand vector");
    }
  }
  return result;
}

}  // namespace crowdsense
