#include "crowdsense/control.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"

namespace crowdsense {

ControllerState make_controller(double alpha, double gamma, double kappa, bool allow_unstable_gamma) {
  if (!std::isfinite(alpha) || !std::isfinite(gamma) || !std::isfinite(kappa)) {
    throw ValidationError("make_controller: gains must be finite");
  }
  if (std::abs(gamma) > 1.0) {
    if (!allow_unstable_gamma) {
      throw ValidationError("make_controller: |gamma| = " + std::to_string(std::abs(gamma)) +
                            " exceeds 1; pass allow_unstable_gamma to override");
    }
    std::cerr << "warning: controller pole |gamma| = " << std::abs(gamma)
              << " exceeds 1, broadcasts may grow without bound\n";
  }
  ControllerState state;
  state.alpha = alpha;
  state.gamma = gamma;
  state.kappa = kappa;
  return state;
}

double controller_step(ControllerState& state, double error) {
  const double pi = state.gamma * state.prev_pi + state.kappa * (error - state.alpha * state.prev_error);
  state.prev_pi = pi;
  state.prev_error = error;
  return pi;
}

double controller_step_clamped(ControllerState& state, double error, double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("controller_step_clamped: empty clamp interval");
  const double pi = std::clamp(controller_step(state, error), lo, hi);
  state.prev_pi = pi;
  return pi;
}

double filter_step(const FilterSpec& spec, std::span<const double> y_history) {
  if (y_history.empty()) throw ValidationError("filter_step: history must be non-empty");
  switch (spec.kind) {
    case FilterSpec::Kind::identity:
      return y_history.back();
    case FilterSpec::Kind::moving_average: {
      if (spec.window < 1) throw ValidationError("filter_step: window must be at least 1");
      const std::size_t take = std::min(spec.window, y_history.size());
      const auto tail = y_history.subspan(y_history.size() - take);
      return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(take);
    }
  }
  throw ValidationError("filter_step: unknown filter kind");
}

void LoopRecord::push(std::int64_t tick, double y_value, double y_hat_value, double e_value, double pi_value) {
  k.push_back(tick);
  y.push_back(y_value);
  y_hat.push_back(y_hat_value);
  e.push_back(e_value);
  pi.push_back(pi_value);
}

void write_loop_csv(std::ostream& out, const LoopRecord& record) {
  out << "# schema: loop/v1\n";
  out << "k,y,y_hat,e,pi\n";
  for (std::size_t i = 0; i < record.size(); ++i) {
    out << format_i64(record.k[i]) << "," << format_double(record.y[i]) << "," << format_double(record.y_hat[i])
        << "," << format_double(record.e[i]) << "," << format_double(record.pi[i]) << "\n";
  }
}

LoopRecord read_loop_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const std::size_t ck = table.column("k");
  const std::size_t cy = table.column("y");
  const std::size_t cyh = table.column("y_hat");
  const std::size_t ce = table.column("e");
  const std::size_t cpi = table.column("pi");
  LoopRecord record;
  for (const auto& row : table.rows) {
    record.push(parse_i64(row[ck]), parse_double(row[cy]), parse_double(row[cyh]), parse_double(row[ce]),
                parse_double(row[cpi]));
  }
  return record;
}

IfsPopulation::IfsPopulation(StateDependentIFS system, std::vector<Eigen::VectorXd> initial_states,
                             std::uint64_t master_seed, Eigen::Index aggregate_coordinate)
    : system_(std::move(system)), states_(std::move(initial_states)), coordinate_(aggregate_coordinate) {
  if (states_.empty()) throw ValidationError("IfsPopulation: needs at least one agent");
  for (const auto& x : states_) {
    if (x.size() != system_.dim()) throw ValidationError("IfsPopulation: initial state dimension mismatch");
  }
  if (coordinate_ < 0 || coordinate_ >= system_.dim()) {
    throw ValidationError("IfsPopulation: aggregate coordinate out of range");
  }
  streams_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) streams_.emplace_back(master_seed, i);
}

void IfsPopulation::step_all(double pi) {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    states_[i] = step(system_, states_[i], pi, streams_[i].next_unit()).state;
  }
}

double IfsPopulation::aggregate() const {
  double sum = 0.0;
  for (const auto& x : states_) sum += x(coordinate_);
  return sum;
}

void IfsPopulation::perturb(double delta, RngStream& rng) {
  if (!(delta >= 0.0)) throw ValidationError("IfsPopulation: perturbation delta must be nonnegative");
  for (auto& x : states_) {
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      double v = x(a) + rng.next_uniform(-delta, delta);
      if (state_box_) v = std::clamp(v, state_box_->first(a), state_box_->second(a));
      x(a) = v;
    }
  }
}

void IfsPopulation::set_system(StateDependentIFS system) {
  if (system.dim() != system_.dim()) throw ValidationError("IfsPopulation: replacement system dimension mismatch");
  system_ = std::move(system);
}

void IfsPopulation::set_state_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != system_.dim() || hi.size() != system_.dim()) {
    throw ValidationError("IfsPopulation: state box dimension mismatch");
  }
  state_box_ = std::make_pair(lo, hi);
}

ClosedLoopResult run_closed_loop(AgentPopulation& population, ControllerState controller,
                                 const ClosedLoopOptions& options) {
  if (options.ticks == 0) throw ValidationError("run_closed_loop: ticks must be positive");
  if (options.control_period == 0) throw ValidationError("run_closed_loop: control period must be positive");
  if (!(options.pi_min <= options.pi_max)) throw ValidationError("run_closed_loop: empty clamp interval");

  ClosedLoopResult result;
  if (options.record_agent_states) result.agent_series.resize(population.size());

  std::vector<double> y_history;
  y_history.reserve(options.ticks + 1);
  double current_pi = std::clamp(options.pi_initial, options.pi_min, options.pi_max);

  const auto record_states = [&]() {
    if (!options.record_agent_states) return;
    auto* ifs_pop = dynamic_cast<IfsPopulation*>(&population);
    if (ifs_pop == nullptr) {
      throw ValidationError("run_closed_loop: state recording requires an IfsPopulation");
    }
    for (std::size_t i = 0; i < population.size(); ++i) {
      result.agent_series[i].push_back(ifs_pop->state_coordinate(i));
    }
  };

  const double y0 = population.aggregate();
  y_history.push_back(y0);
  const double y_hat0 = filter_step(options.filter, y_history);
  result.record.push(0, y0, y_hat0, options.r_target - y_hat0, current_pi);
  record_states();

  for (std::size_t k = 1; k <= options.ticks; ++k) {
    population.step_all(current_pi);
    const double y = population.aggregate();
    y_history.push_back(y);
    const double y_hat = filter_step(options.filter, y_history);
    const double e = options.r_target - y_hat;
    if (k % options.control_period == 0) {
      current_pi = controller_step_clamped(controller, e, options.pi_min, options.pi_max);
    }
    result.record.push(static_cast<std::int64_t>(k), y, y_hat, e, current_pi);
    record_states();
  }
  result.final_controller = controller;
  return result;
}

void apply_environment_perturbation(AgentPopulation& population, double delta, RngStream& rng) {
  if (!(delta >= 0.0)) throw ValidationError("apply_environment_perturbation: delta must be nonnegative");
  population.perturb(delta, rng);
}

}  // namespace crowdsense
