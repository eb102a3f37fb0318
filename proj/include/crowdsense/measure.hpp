#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "crowdsense/ifs.hpp"
#include "crowdsense/norms.hpp"
#include "crowdsense/rng.hpp"
#include "crowdsense/transport.hpp"

namespace crowdsense {

// Provenance of a sampled measure, kept so results can be reproduced.
struct SampleMetadata {
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::uint64_t seed = 0;
};

// Equal-weight samples in R^d, stored flat (sample-major).
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(Eigen::Index dim, std::vector<double> flat_samples, SampleMetadata metadata = {});
  static EmpiricalMeasure from_scalars(std::vector<double> samples, SampleMetadata metadata = {});

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return flat_.size() / static_cast<std::size_t>(dim_); }
  Eigen::Map<const Eigen::VectorXd> sample(std::size_t k) const;
  const std::vector<double>& flat() const { return flat_; }
  // One-dimensional view; throws unless dim() == 1.
  std::span<const double> scalars() const;
  const SampleMetadata& metadata() const { return metadata_; }

 private:
  Eigen::Index dim_;
  std::vector<double> flat_;
  SampleMetadata metadata_;
};

// Weighted point masses in R^d. Weights are nonnegative and sum to one
// within 1e-12.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Eigen::Index dim, std::vector<double> flat_support, std::vector<double> weights);
  static DiscreteMeasure from_atoms(const std::vector<KernelAtom>& atoms);
  // Equal weights with exactly equal sample points merged.
  static DiscreteMeasure from_samples(const EmpiricalMeasure& samples);

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  Eigen::Map<const Eigen::VectorXd> point(std::size_t k) const;
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& flat_support() const { return flat_; }

  // Smallest box enclosing the support, used for diameter computations.
  void bounding_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;

 private:
  Eigen::Index dim_;
  std::vector<double> flat_;
  std::vector<double> weights_;
};

// Exact 1-D Wasserstein-1 distance between equal-weight sample sets
// (quantile-difference integral; sizes may differ).
double wasserstein1_1d(std::span<const double> xs, std::span<const double> ys);
double wasserstein1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Exact Wasserstein-1 distance between weighted discrete measures in any
// dimension, with the chosen norm as ground metric. The combined support
// size must not exceed support_cap; above it a CapacityError explains the
// subsampling alternatives.
struct DiscreteW1Result {
  double distance;
  TransportResult transport;
};
DiscreteW1Result wasserstein1_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       Norm norm = Norm::two, std::size_t support_cap = 2000);

// Stationary distribution nu of a row-stochastic matrix: nu^T P = nu^T,
// entries nonnegative summing to one, residual below residual_tol. Requires
// a unique closed communicating class; otherwise NonUniqueError.
Eigen::VectorXd stationary_distribution_finite(const Eigen::MatrixXd& transition, double residual_tol = 1e-10);

// Sample the invariant distribution of a system by running one long
// trajectory under a frozen signal, discarding burn_in steps and keeping
// every thinning-th state afterwards.
// seed_label is recorded in the sample metadata (the stream itself carries
// no recoverable seed).
EmpiricalMeasure empirical_invariant(const StateDependentIFS& ifs, const Eigen::VectorXd& x0, double pi,
                                     std::size_t n_samples, std::size_t burn_in, std::size_t thinning,
                                     RngStream& rng, std::uint64_t seed_label = 0);

// Burn-in heuristic: enough steps for a contraction factor r_hat to shrink
// unit mass below 1e-9, times a safety factor of 10.
std::size_t default_burn_in(double r_hat);

struct PerturbationBoundInputs {
  double r;                 // contraction factor of the reference operator, in (0, 1)
  double r_prime;           // Lipschitz bound of the admissible test functions (1 for W1)
  double weighted_map_gap;  // sup_x sum_sigma p_sigma(x) ||w_sigma(x) - w'_sigma(x)||
  double beta;              // sup-norm bound of the test functions on the support
  double eta;               // sup_x sum_sigma |p_sigma(x) - p'_sigma(x)|
};

// Upper bound on the W1 distance between the invariant measures of a system
// and its perturbation:
//   (1 / (1 - r)) * (r_prime * weighted_map_gap + beta * eta).
double perturbation_bound(const PerturbationBoundInputs& inputs);

// sup over sampled states x of sum_sigma p_sigma(x) ||w_sigma(x) - w'_sigma(x)||.
// Both systems must have the same map count and dimension; probabilities are
// taken from `reference`.
double weighted_map_gap(const StateDependentIFS& reference, const StateDependentIFS& perturbed,
                        const ProbabilityDomain& domain, Norm norm = Norm::two);

// sup over sampled states of sum_sigma |p_sigma(x) - p'_sigma(x)|.
double probability_gap(const StateDependentIFS& reference, const StateDependentIFS& perturbed,
                       const ProbabilityDomain& domain);

struct ContractionEstimate {
  double value;                    // analytic bound when available, else sampled_max
  double sampled_max;              // max W1(kernel(x), kernel(y)) / ||x - y|| over sampled pairs
  std::optional<double> analytic;  // sum_sigma p_sigma ||A_sigma||, constant probabilities only
  std::size_t pairs;
  bool is_estimate() const { return !analytic.has_value(); }
};

// One-step W1 contraction factor of the transition kernel, estimated on
// state pairs sampled uniformly from the box [lo, hi]. With constant
// probabilities the exact coupling bound sum p_sigma ||A_sigma|| is also
// computed and returned as `value` (the sampled ratio never exceeds it and
// only the analytic form is a certified upper bound).
ContractionEstimate estimate_contraction_factor(const StateDependentIFS& ifs, const Eigen::VectorXd& lo,
                                                const Eigen::VectorXd& hi, std::size_t n_pairs, double pi,
                                                RngStream& rng, Norm norm = Norm::two);

// Bootstrap standard error of the 1-D W1 distance between two sample sets
// (resampling both sides with replacement).
double bootstrap_w1_se(std::span<const double> xs, std::span<const double> ys, std::size_t resamples,
                       RngStream& rng);

// CSV serialization: columns x0..x{d-1},weight with a schema comment line.
void write_measure_csv(std::ostream& out, const DiscreteMeasure& measure);
DiscreteMeasure read_measure_csv(std::istream& in);

}  // namespace crowdsense
