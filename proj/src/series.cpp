#include "crowdsense/series.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"

namespace crowdsense {

void write_state_series_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t dim = static_cast<std::size_t>(trajectory.dim());
  out << "# schema: trajectory/v1\n";
  out << "k,sigma";
  for (std::size_t c = 0; c < dim; ++c) out << ",x" << c;
  out << '\n';
  const std::size_t rows = trajectory.steps() + 1;
  for (std::size_t k = 0; k < rows; ++k) {
    out << format_u64(k) << ',';
    if (k > 0) out << format_u64(trajectory.chosen_indices()[k - 1]);
    const auto state = trajectory.state(k);
    for (std::size_t c = 0; c < dim; ++c) out << ',' << format_double(state(static_cast<Eigen::Index>(c)));
    out << '\n';
  }
}

StateSeries read_state_series_csv(std::istream& in) {
  CsvTable table = read_csv(in);
  if (table.header.size() < 3 || table.header[0] != "k" || table.header[1] != "sigma") {
    throw ConfigError("trajectory csv: header must start with k,sigma,x0");
  }
  const std::size_t dim = table.header.size() - 2;
  for (std::size_t c = 0; c < dim; ++c) {
    if (table.header[c + 2] != "x" + std::to_string(c)) {
      throw ConfigError("trajectory csv: state column " + std::to_string(c + 2) + " must be named x" +
                        std::to_string(c));
    }
  }

  StateSeries series;
  series.states.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    if (fields.size() != dim + 2) throw ConfigError("trajectory csv: row has wrong field count");
    series.ticks.push_back(parse_double(fields[0]));
    series.sigmas.push_back(fields[1].empty() ? -1 : static_cast<long>(parse_u64(fields[1])));
    for (std::size_t c = 0; c < dim; ++c) {
      series.states(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = parse_double(fields[c + 2]);
    }
  }
  return series;
}

void write_agent_series_csv(std::ostream& out, const std::vector<double>& ticks,
                            const std::vector<std::vector<double>>& agents) {
  for (const auto& series : agents) {
    if (series.size() != ticks.size())
      throw ValidationError("agent series: every agent needs one value per tick");
  }
  out << "# schema: agents/v1\n";
  out << "tick";
  for (std::size_t a = 0; a < agents.size(); ++a) out << ",agent_" << a;
  out << '\n';
  for (std::size_t t = 0; t < ticks.size(); ++t) {
    out << format_double(ticks[t]);
    for (const auto& series : agents) out << ',' << format_double(series[t]);
    out << '\n';
  }
}

AgentSeries read_agent_series_csv(std::istream& in) {
  CsvTable table = read_csv(in);
  if (table.header.empty() || table.header[0] != "tick") {
    throw ConfigError("agents csv: first column must be named tick");
  }
  const std::size_t n_agents = table.header.size() - 1;
  for (std::size_t a = 0; a < n_agents; ++a) {
    if (table.header[a + 1] != "agent_" + std::to_string(a)) {
      throw ConfigError("agents csv: column " + std::to_string(a + 1) + " must be named agent_" +
                        std::to_string(a));
    }
  }

  AgentSeries series;
  series.agents.resize(n_agents);
  for (auto& v : series.agents) v.reserve(table.rows.size());
  for (const auto& fields : table.rows) {
    if (fields.size() != n_agents + 1) throw ConfigError("agents csv: row has wrong field count");
    series.ticks.push_back(parse_double(fields[0]));
    for (std::size_t a = 0; a < n_agents; ++a) {
      series.agents[a].push_back(parse_double(fields[a + 1]));
    }
  }
  return series;
}

}  // namespace crowdsense
