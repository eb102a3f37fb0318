#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "crowdsense/errors.hpp"
#include "crowdsense/norms.hpp"
#include "crowdsense/rng.hpp"

namespace crowdsense {

struct SchurReport {
  bool stable;
  double spectral_radius;
};

// A matrix is accepted as stable when its spectral radius is below
// 1 - margin. The margin guards against eigenvalue round-off right at the
// unit circle.
SchurReport verify_schur(const Eigen::MatrixXd& a, double margin = 1e-9);

// Affine contraction candidate x -> A x + b. The linear part must pass the
// stability check at construction; dimensions of A and b must agree.
class AffineMap {
 public:
  AffineMap(Eigen::MatrixXd a, Eigen::VectorXd b, double schur_margin = 1e-9);

  static AffineMap scalar(double a, double b, double schur_margin = 1e-9);
  // Constant map x -> c (zero linear part), used for on/off agents.
  static AffineMap constant(const Eigen::VectorXd& c);

  const Eigen::MatrixXd& linear() const { return a_; }
  const Eigen::VectorXd& offset() const { return b_; }
  Eigen::Index dim() const { return b_.size(); }
  double spectral_radius() const { return spectral_radius_; }

  // Lipschitz constant with respect to the chosen norm (induced operator
  // norm of the linear part).
  double lipschitz(Norm norm = Norm::two) const;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return a_ * x + b_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  double spectral_radius_;
};

// Probability tuple over the maps of a system. Weights must be nonnegative
// and sum to one within sum_tol.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> weights, double sum_tol = 1e-12);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  double min_weight() const;

  // Every weight must lie in [delta, 1]. Loops that rely on the ergodicity
  // precondition call this on each evaluation.
  void require_floor(double delta) const;

 private:
  std::vector<double> weights_;
};

// Index of the cumulative bin containing q, with bins
// [0, w0), [w0, w0+w1), ... on [0, 1]. q must lie in [0, 1]; q beyond the
// last accumulated boundary (in particular q == 1.0) selects the last index
// with positive weight, so zero-width bins are never reachable.
std::size_t sample_index(const ProbabilityVector& p, double q);

using ProbabilityFn = std::function<ProbabilityVector(const Eigen::VectorXd& x, double pi)>;

// Axis-aligned box with a sampling grid, used to spot-check probability
// functions at construction and to estimate their Lipschitz constant.
struct ProbabilityDomain {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int points_per_axis = 5;
  std::vector<double> signals = {0.0};
};

// Iterated function system whose map choice probabilities may depend on the
// current state and on a scalar broadcast signal. Immutable once built.
class StateDependentIFS {
 public:
  // probability_floor, when set, is enforced on every probability
  // evaluation. spot_check, when set, evaluates the probability function on
  // the given grid at construction and rejects invalid tuples early.
  StateDependentIFS(std::vector<AffineMap> maps, ProbabilityFn prob_fn,
                    std::optional<double> probability_floor = std::nullopt,
                    const std::optional<ProbabilityDomain>& spot_check = std::nullopt);

  // System whose probabilities ignore state and signal. Enables the exact
  // contraction bound in estimate_contraction_factor.
  static StateDependentIFS with_constant_probabilities(std::vector<AffineMap> maps, ProbabilityVector p,
                                                       std::optional<double> probability_floor = std::nullopt);

  std::size_t map_count() const { return maps_.size(); }
  Eigen::Index dim() const { return maps_.front().dim(); }
  const AffineMap& map(std::size_t i) const { return maps_[i]; }
  const std::vector<AffineMap>& maps() const { return maps_; }

  ProbabilityVector probabilities(const Eigen::VectorXd& x, double pi) const;

  bool has_constant_probabilities() const { return constant_.has_value(); }
  const ProbabilityVector& constant_probabilities() const;
  std::optional<double> probability_floor() const { return floor_; }

 private:
  std::vector<AffineMap> maps_;
  ProbabilityFn prob_fn_;
  std::optional<double> floor_;
  std::optional<ProbabilityVector> constant_;
};

struct StepResult {
  Eigen::VectorXd state;
  std::size_t index;
};

// One transition: draw sigma from the probabilities at (x, pi) using q,
// then apply that map.
StepResult step(const StateDependentIFS& ifs, const Eigen::VectorXd& x, double pi, double q);

// Realized path of a system: states x(0..K), the map index chosen at each
// step, and the signal value each step saw. The class maintains
// |states| == |indices| + 1 == |signals| + 1.
class Trajectory {
 public:
  Trajectory(Eigen::Index dim, std::vector<double> flat_states, std::vector<std::size_t> indices,
             std::vector<double> signals);

  Eigen::Index dim() const { return dim_; }
  std::size_t steps() const { return indices_.size(); }
  Eigen::Map<const Eigen::VectorXd> state(std::size_t k) const;
  const std::vector<std::size_t>& chosen_indices() const { return indices_; }
  const std::vector<double>& signals() const { return signals_; }
  const std::vector<double>& flat_states() const { return flat_; }

  // Coordinate `coord` of every state, in step order.
  std::vector<double> coordinate(Eigen::Index coord) const;

 private:
  Eigen::Index dim_;
  std::vector<double> flat_;
  std::vector<std::size_t> indices_;
  std::vector<double> signals_;
};

// Simulate signals.size() steps from x0, drawing one q per step from rng.
Trajectory simulate_trajectory(const StateDependentIFS& ifs, const Eigen::VectorXd& x0,
                               std::span<const double> signals, RngStream& rng);

// Deterministically re-run a recorded index sequence. Uses the same
// arithmetic as step(), so states reproduce bit for bit.
std::vector<Eigen::VectorXd> replay(const StateDependentIFS& ifs, const Eigen::VectorXd& x0,
                                    std::span<const std::size_t> indices);

struct KernelAtom {
  Eigen::VectorXd point;
  double weight;
};

// One-step transition distribution from x: the map images with their
// probabilities. Atoms with exactly equal images are merged (weights
// summed); first-occurrence order is kept.
std::vector<KernelAtom> transition_kernel(const StateDependentIFS& ifs, const Eigen::VectorXd& x, double pi);

struct CouplingResult {
  std::vector<double> distance;       // d(0..K)
  std::vector<std::size_t> indices;   // shared sigma(0..K-1)
};

// Two trajectories driven by one shared index sequence; sigma is drawn from
// the probabilities along the first trajectory. distance[k] is the norm of
// x(k) - y(k).
CouplingResult coupling_distance(const StateDependentIFS& ifs, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& y0, std::span<const double> signals, RngStream& rng,
                                 Norm norm = Norm::two);

// Worst-case one-step growth factor under the shared-index coupling:
// max over maps of the induced operator norm of the linear part. The
// coupled distance satisfies d(k) <= bound^k * d(0) pathwise.
double coupling_rate_bound(const StateDependentIFS& ifs, Norm norm = Norm::two);

// Largest ||p(x,pi) - p(y,pi)||_1 / ||x - y|| over distinct grid points of
// the domain, across its signal values. Diagnostic for the continuity
// requirement on the probability function.
double probability_lipschitz_estimate(const StateDependentIFS& ifs, const ProbabilityDomain& domain,
                                      Norm norm = Norm::two);

}  // namespace crowdsense
