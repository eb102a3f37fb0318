#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "crowdsense/ifs.hpp"
#include "crowdsense/rng.hpp"

namespace crowdsense {

// First-order broadcast controller
//   pi(k) = gamma * pi(k-1) + kappa * (e(k) - alpha * e(k-1)),
// with the previous broadcast and previous error as its state.
struct ControllerState {
  double alpha = -4.01;
  double gamma = 0.99;
  double kappa = 0.1;
  double prev_pi = 0.0;
  double prev_error = 0.0;
};

// |gamma| <= 1 is required by default; allow_unstable_gamma overrides the
// check and prints a one-line warning to stderr.
ControllerState make_controller(double alpha, double gamma, double kappa, bool allow_unstable_gamma = false);

// One controller update. Pure linear recursion (no clamping); returns the
// new broadcast and advances the state.
double controller_step(ControllerState& state, double error);

// Controller update followed by clamping to [lo, hi]. The clamped value is
// written back as prev_pi so the recursion cannot wind up beyond the rails.
double controller_step_clamped(ControllerState& state, double error, double lo, double hi);

struct FilterSpec {
  enum class Kind { identity, moving_average };
  Kind kind = Kind::identity;
  std::size_t window = 1;
};

// Observation estimate from the aggregate history (oldest first). The
// moving average uses the most recent `window` values, or all of them while
// the history is still shorter than the window.
double filter_step(const FilterSpec& spec, std::span<const double> y_history);

// Time series of one closed-loop run. The pi column holds the broadcast in
// force after the row's tick (updates take effect on the next tick).
struct LoopRecord {
  std::vector<std::int64_t> k;
  std::vector<double> y;
  std::vector<double> y_hat;
  std::vector<double> e;
  std::vector<double> pi;

  std::size_t size() const { return k.size(); }
  void push(std::int64_t tick, double y_value, double y_hat_value, double e_value, double pi_value);
};

void write_loop_csv(std::ostream& out, const LoopRecord& record);
LoopRecord read_loop_csv(std::istream& in);

// A population the closed loop can drive: agents advance together under the
// current broadcast and expose a scalar aggregate.
class AgentPopulation {
 public:
  virtual ~AgentPopulation() = default;
  virtual std::size_t size() const = 0;
  virtual void step_all(double pi) = 0;
  virtual double aggregate() const = 0;
  // Bounded environment disturbance: each agent's auxiliary variable moves
  // by at most delta (the population defines what that variable is).
  virtual void perturb(double delta, RngStream& rng) = 0;
};

// Population of independent agents sharing one system definition. Each
// agent owns a stream derived from (master seed, agent index); the
// aggregate is the sum of one state coordinate.
class IfsPopulation : public AgentPopulation {
 public:
  IfsPopulation(StateDependentIFS system, std::vector<Eigen::VectorXd> initial_states,
                std::uint64_t master_seed, Eigen::Index aggregate_coordinate = 0);

  std::size_t size() const override { return states_.size(); }
  void step_all(double pi) override;
  double aggregate() const override;
  // Moves every state coordinate by an independent uniform draw in
  // [-delta, delta], clipped to the state box when one is set.
  void perturb(double delta, RngStream& rng) override;

  // Swap the dynamics mid-run (states and streams are kept), for piecewise
  // constant regimes.
  void set_system(StateDependentIFS system);
  void set_state_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

  const Eigen::VectorXd& state(std::size_t agent) const { return states_[agent]; }
  double state_coordinate(std::size_t agent) const { return states_[agent](coordinate_); }

 private:
  StateDependentIFS system_;
  std::vector<Eigen::VectorXd> states_;
  std::vector<RngStream> streams_;
  Eigen::Index coordinate_;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> state_box_;
};

struct ClosedLoopOptions {
  double r_target = 0.0;
  std::size_t ticks = 0;
  std::size_t control_period = 1;
  FilterSpec filter;
  double pi_min = -50.0;
  double pi_max = 50.0;
  double pi_initial = 0.0;
  bool record_agent_states = false;
};

struct ClosedLoopResult {
  LoopRecord record;
  // agent_series[agent][tick], aggregate coordinate only; filled when
  // record_agent_states is set.
  std::vector<std::vector<double>> agent_series;
  ControllerState final_controller;
};

// Run the loop: agents step every tick under a zero-order-held broadcast;
// the controller updates every control_period ticks from the filtered
// aggregate, with e = r_target - y_hat. Row 0 records the initial state.
ClosedLoopResult run_closed_loop(AgentPopulation& population, ControllerState controller,
                                 const ClosedLoopOptions& options);

// Bounded disturbance entry point used between run segments.
void apply_environment_perturbation(AgentPopulation& population, double delta, RngStream& rng);

}  // namespace crowdsense
