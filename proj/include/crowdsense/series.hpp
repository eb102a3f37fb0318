#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "crowdsense/ifs.hpp"

namespace crowdsense {

// trajectory/v1: one row per step with the map index that produced it. The
// index column is empty on the first row, which is the initial state.
struct StateSeries {
  std::vector<double> ticks;
  std::vector<long> sigmas;  // -1 where the column was empty
  Eigen::MatrixXd states;    // dim x rows
};

void write_state_series_csv(std::ostream& out, const Trajectory& trajectory);
StateSeries read_state_series_csv(std::istream& in);

// agents/v1: one row per tick, one column per agent.
struct AgentSeries {
  std::vector<double> ticks;
  std::vector<std::vector<double>> agents;  // [agent][tick]
};

void write_agent_series_csv(std::ostream& out, const std::vector<double>& ticks,
                            const std::vector<std::vector<double>>& agents);
AgentSeries read_agent_series_csv(std::istream& in);

}  // namespace crowdsense
