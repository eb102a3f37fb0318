#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

// Independent reference implementations used only to cross-check results.

namespace oracles {

// Spectral radius of a 2x2 matrix from the characteristic polynomial.
inline double radius_2x2(const Eigen::Matrix2d& a) {
  const double t = a(0, 0) + a(1, 1);
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double disc = t * t - 4.0 * det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return std::max(std::abs((t + s) / 2.0), std::abs((t - s) / 2.0));
  }
  return std::sqrt(det);
}

// Minimum transport cost by successive shortest augmenting paths with
// Bellman-Ford, written against the flow formulation rather than the
// simplex tableau. Exact for small dense instances.
inline double ssp_min_cost(const std::vector<std::vector<double>>& cost, std::vector<double> supply,
                           std::vector<double> demand) {
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
  const double inf = std::numeric_limits<double>::infinity();

  double remaining = 0.0;
  for (double s : supply) remaining += s;

  while (remaining > 1e-12) {
    // Nodes: 0..n-1 supplies, n..n+m-1 demands, n+m source, n+m+1 sink.
    const std::size_t source = n + m;
    const std::size_t sink = n + m + 1;
    const std::size_t nodes = n + m + 2;
    std::vector<double> dist(nodes, inf);
    std::vector<int> parent(nodes, -1);
    dist[source] = 0.0;

    for (std::size_t round = 0; round + 1 < nodes; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (supply[i] > 1e-12 && dist[source] < dist[i]) {
          dist[i] = dist[source];
          parent[i] = static_cast<int>(source);
          changed = true;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] == inf) continue;
        for (std::size_t j = 0; j < m; ++j) {
          if (dist[i] + cost[i][j] < dist[n + j] - 1e-15) {
            dist[n + j] = dist[i] + cost[i][j];
            parent[n + j] = static_cast<int>(i);
            changed = true;
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (dist[n + j] == inf) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow[i][j] > 1e-12 && dist[n + j] - cost[i][j] < dist[i] - 1e-15) {
            dist[i] = dist[n + j] - cost[i][j];
            parent[i] = static_cast<int>(n + j);
            changed = true;
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (demand[j] > 1e-12 && dist[n + j] < dist[sink]) {
          dist[sink] = dist[n + j];
          parent[sink] = static_cast<int>(n + j);
          changed = true;
        }
      }
      if (!changed) break;
    }

    // Bottleneck along the path.
    double push = remaining;
    {
      std::size_t v = sink;
      while (parent[v] != -1) {
        const std::size_t u = static_cast<std::size_t>(parent[v]);
        if (u == source) {
          push = std::min(push, supply[v]);
        } else if (v == sink) {
          push = std::min(push, demand[u - n]);
        } else if (u < n && v >= n && v < n + m) {
          // forward arc, unbounded
        } else if (u >= n && u < n + m && v < n) {
          push = std::min(push, flow[v][u - n]);
        }
        v = u;
      }
    }

    std::size_t v = sink;
    while (parent[v] != -1) {
      const std::size_t u = static_cast<std::size_t>(parent[v]);
      if (u == source) {
        supply[v] -= push;
      } else if (v == sink) {
        demand[u - n] -= push;
      } else if (u < n && v >= n && v < n + m) {
        flow[u][v - n] += push;
      } else if (u >= n && u < n + m && v < n) {
        flow[v][u - n] -= push;
      }
      v = u;
    }
    remaining -= push;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) total += flow[i][j] * cost[i][j];
  }
  return total;
}

// Chi-square goodness-of-fit statistic for observed counts against expected
// probabilities. Critical values at significance 0.001.
inline double chi_square_statistic(const std::vector<std::size_t>& observed,
                                   const std::vector<double>& expected_prob, std::size_t total) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = expected_prob[i] * static_cast<double>(total);
    if (expected <= 0.0) continue;
    const double diff = static_cast<double>(observed[i]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

inline double chi_square_critical_001(std::size_t df) {
  switch (df) {
    case 1: return 10.828;
    case 2: return 13.816;
    case 3: return 16.266;
    case 4: return 18.467;
    default: return 10.828 + 7.0 * static_cast<double>(df);
  }
}

}  // namespace oracles
