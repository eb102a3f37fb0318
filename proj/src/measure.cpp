#include "crowdsense/measure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <Eigen/QR>

#include "crowdsense/csv.hpp"
#include "crowdsense/errors.hpp"

namespace crowdsense {

EmpiricalMeasure::EmpiricalMeasure(Eigen::Index dim, std::vector<double> flat_samples, SampleMetadata metadata)
    : dim_(dim), flat_(std::move(flat_samples)), metadata_(metadata) {
  if (dim_ < 1) throw ValidationError("EmpiricalMeasure: dimension must be at least 1");
  if (flat_.empty() || flat_.size() % static_cast<std::size_t>(dim_) != 0) {
    throw ValidationError("EmpiricalMeasure: sample storage must hold a positive multiple of dim values");
  }
}

EmpiricalMeasure EmpiricalMeasure::from_scalars(std::vector<double> samples, SampleMetadata metadata) {
  return EmpiricalMeasure(1, std::move(samples), metadata);
}

Eigen::Map<const Eigen::VectorXd> EmpiricalMeasure::sample(std::size_t k) const {
  if (k >= size()) throw ValidationError("EmpiricalMeasure: sample index out of range");
  return Eigen::Map<const Eigen::VectorXd>(flat_.data() + k * static_cast<std::size_t>(dim_), dim_);
}

std::span<const double> EmpiricalMeasure::scalars() const {
  if (dim_ != 1) throw ValidationError("EmpiricalMeasure: scalars() requires dimension 1");
  return {flat_.data(), flat_.size()};
}

DiscreteMeasure::DiscreteMeasure(Eigen::Index dim, std::vector<double> flat_support, std::vector<double> weights)
    : dim_(dim), flat_(std::move(flat_support)), weights_(std::move(weights)) {
  if (dim_ < 1) throw ValidationError("DiscreteMeasure: dimension must be at least 1");
  if (weights_.empty()) throw ValidationError("DiscreteMeasure: needs at least one point");
  if (flat_.size() != weights_.size() * static_cast<std::size_t>(dim_)) {
    throw ValidationError("DiscreteMeasure: support storage does not match weight count");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ValidationError("DiscreteMeasure: weights must be nonnegative and finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ValidationError("DiscreteMeasure: weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

DiscreteMeasure DiscreteMeasure::from_atoms(const std::vector<KernelAtom>& atoms) {
  if (atoms.empty()) throw ValidationError("DiscreteMeasure: atom list is empty");
  const Eigen::Index d = atoms.front().point.size();
  std::vector<double> flat;
  flat.reserve(atoms.size() * static_cast<std::size_t>(d));
  std::vector<double> weights;
  weights.reserve(atoms.size());
  for (const auto& atom : atoms) {
    if (atom.point.size() != d) throw ValidationError("DiscreteMeasure: atoms must share one dimension");
    flat.insert(flat.end(), atom.point.data(), atom.point.data() + d);
    weights.push_back(atom.weight);
  }
  return DiscreteMeasure(d, std::move(flat), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::from_samples(const EmpiricalMeasure& samples) {
  const Eigen::Index d = samples.dim();
  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& flat = samples.flat();
  const auto less = [&](std::size_t a, std::size_t b) {
    const double* pa = flat.data() + a * static_cast<std::size_t>(d);
    const double* pb = flat.data() + b * static_cast<std::size_t>(d);
    return std::lexicographical_compare(pa, pa + d, pb, pb + d);
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<double> support;
  std::vector<double> weights;
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double* p = flat.data() + order[k] * static_cast<std::size_t>(d);
    const bool same_as_previous = k > 0 && std::equal(p, p + d, support.end() - d);
    if (same_as_previous) {
      weights.back() += w;
    } else {
      support.insert(support.end(), p, p + d);
      weights.push_back(w);
    }
  }
  return DiscreteMeasure(d, std::move(support), std::move(weights));
}

Eigen::Map<const Eigen::VectorXd> DiscreteMeasure::point(std::size_t k) const {
  if (k >= size()) throw ValidationError("DiscreteMeasure: point index out of range");
  return Eigen::Map<const Eigen::VectorXd>(flat_.data() + k * static_cast<std::size_t>(dim_), dim_);
}

void DiscreteMeasure::bounding_box(Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
  lo = point(0);
  hi = point(0);
  for (std::size_t k = 1; k < size(); ++k) {
    lo = lo.cwiseMin(point(k));
    hi = hi.cwiseMax(point(k));
  }
}

double wasserstein1_1d(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw ValidationError("wasserstein1_1d: sample sets must be non-empty");
  std::vector<double> x(xs.begin(), xs.end());
  std::vector<double> y(ys.begin(), ys.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  // Integral of |F_x - F_y| over the merged support (piecewise constant
  // between order statistics); exact for empirical measures of any sizes.
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double total = 0.0;
  double prev = 0.0;
  bool first = true;
  while (i < x.size() || j < y.size()) {
    const double xi = i < x.size() ? x[i] : std::numeric_limits<double>::infinity();
    const double yj = j < y.size() ? y[j] : std::numeric_limits<double>::infinity();
    const double cur = std::min(xi, yj);
    if (!first) total += std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m) * (cur - prev);
    while (i < x.size() && x[i] == cur) ++i;
    while (j < y.size() && y[j] == cur) ++j;
    prev = cur;
    first = false;
  }
  return total;
}

double wasserstein1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return wasserstein1_1d(mu.scalars(), nu.scalars());
}

DiscreteW1Result wasserstein1_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Norm norm,
                                       std::size_t support_cap) {
  if (mu.dim() != nu.dim()) throw ValidationError("wasserstein1_discrete: measures must share one dimension");
  const std::size_t combined = mu.size() + nu.size();
  if (combined > support_cap) {
    throw CapacityError("wasserstein1_discrete: combined support " + std::to_string(combined) +
                        " exceeds the cap " + std::to_string(support_cap) +
                        "; subsample the measures or compare 1-D coordinate projections with wasserstein1_1d");
  }
  Eigen::MatrixXd cost(mu.size(), nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          vector_norm(mu.point(i) - nu.point(j), norm);
    }
  }
  TransportResult transport = solve_transport(cost, mu.weights(), nu.weights());
  return DiscreteW1Result{transport.cost, std::move(transport)};
}

namespace {

// Closed communicating classes of the directed graph induced by positive
// transition probabilities. Uniqueness of the stationary distribution is
// equivalent to there being exactly one.
std::size_t count_closed_classes(const Eigen::MatrixXd& p) {
  const std::size_t n = static_cast<std::size_t>(p.rows());
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t s = 0; s < n; ++s) {
    std::deque<std::size_t> queue = {s};
    reach[s][s] = 1;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && !reach[s][v]) {
          reach[s][v] = 1;
          queue.push_back(v);
        }
      }
    }
  }
  std::vector<char> seen(n, 0);
  std::size_t closed = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    // Communicating class of s.
    std::vector<std::size_t> members;
    for (std::size_t t = 0; t < n; ++t) {
      if (reach[s][t] && reach[t][s]) members.push_back(t);
    }
    bool is_closed = true;
    for (std::size_t u : members) {
      seen[u] = 1;
      for (std::size_t v = 0; v < n; ++v) {
        if (p(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0 && !reach[v][u]) {
          is_closed = false;
        }
      }
    }
    if (is_closed) ++closed;
  }
  return closed;
}

}  // namespace

Eigen::VectorXd stationary_distribution_finite(const Eigen::MatrixXd& transition, double residual_tol) {
  const Eigen::Index n = transition.rows();
  if (n < 1 || transition.cols() != n) {
    throw ValidationError("stationary_distribution_finite: transition matrix must be square");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(transition(i, j) >= 0.0)) {
        throw ValidationError("stationary_distribution_finite: entries must be nonnegative");
      }
      row += transition(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12) {
      throw ValidationError("stationary_distribution_finite: row " + std::to_string(i) + " sums to " +
                            std::to_string(row) + ", expected 1");
    }
  }
  const std::size_t closed = count_closed_classes(transition);
  if (closed != 1) {
    throw NonUniqueError("stationary_distribution_finite: " + std::to_string(closed) +
                         " closed communicating classes, stationary distribution is not unique");
  }

  // Solve the overdetermined system [P^T - I; 1^T] nu = [0; 1] by QR. With a
  // unique stationary distribution the stacked matrix has full column rank.
  Eigen::MatrixXd system(n + 1, n);
  system.topRows(n) = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  system.bottomRows(1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  Eigen::VectorXd nu = system.colPivHouseholderQr().solve(rhs);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (nu(i) < -1e-12) {
      throw NumericError("stationary_distribution_finite: solver produced a negative mass");
    }
    nu(i) = std::max(nu(i), 0.0);
  }
  nu /= nu.sum();
  const double residual = (transition.transpose() * nu - nu).lpNorm<Eigen::Infinity>();
  if (residual > residual_tol) {
    throw NumericError("stationary_distribution_finite: residual " + std::to_string(residual) +
                       " exceeds tolerance");
  }
  return nu;
}

EmpiricalMeasure empirical_invariant(const StateDependentIFS& ifs, const Eigen::VectorXd& x0, double pi,
                                     std::size_t n_samples, std::size_t burn_in, std::size_t thinning,
                                     RngStream& rng, std::uint64_t seed_label) {
  if (n_samples == 0) throw ValidationError("empirical_invariant: need at least one sample");
  if (thinning == 0) throw ValidationError("empirical_invariant: thinning must be at least 1");
  if (x0.size() != ifs.dim()) throw ValidationError("empirical_invariant: initial state dimension mismatch");
  const std::size_t d = static_cast<std::size_t>(ifs.dim());
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < burn_in; ++k) x = step(ifs, x, pi, rng.next_unit()).state;
  std::vector<double> flat;
  flat.reserve(n_samples * d);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t k = 0; k < thinning; ++k) x = step(ifs, x, pi, rng.next_unit()).state;
    flat.insert(flat.end(), x.data(), x.data() + d);
  }
  return EmpiricalMeasure(ifs.dim(), std::move(flat), SampleMetadata{burn_in, thinning, seed_label});
}

std::size_t default_burn_in(double r_hat) {
  if (!(r_hat >= 0.0) || r_hat >= 1.0) {
    throw ValidationError("default_burn_in: contraction factor must lie in [0, 1)");
  }
  if (r_hat == 0.0) return 10;
  const double steps = std::ceil(std::log(1e-9) / std::log(r_hat));
  return 10 * static_cast<std::size_t>(std::max(1.0, steps));
}

double perturbation_bound(const PerturbationBoundInputs& inputs) {
  if (!(inputs.r >= 0.0) || inputs.r >= 1.0) {
    throw ValidationError("perturbation_bound: contraction factor r must lie in [0, 1); got " +
                          std::to_string(inputs.r));
  }
  if (!(inputs.r_prime >= 0.0) || !(inputs.weighted_map_gap >= 0.0) || !(inputs.beta >= 0.0) ||
      !(inputs.eta >= 0.0)) {
    throw ValidationError("perturbation_bound: r_prime, weighted_map_gap, beta and eta must be nonnegative");
  }
  return (inputs.r_prime * inputs.weighted_map_gap + inputs.beta * inputs.eta) / (1.0 - inputs.r);
}

namespace {

std::vector<Eigen::VectorXd> domain_grid(const ProbabilityDomain& domain, Eigen::Index dim) {
  if (domain.lo.size() != dim || domain.hi.size() != dim) {
    throw ValidationError("domain grid: dimension mismatch");
  }
  if (domain.points_per_axis < 1) throw ValidationError("domain grid: need at least one point per axis");
  std::size_t total = 1;
  for (Eigen::Index axis = 0; axis < dim; ++axis) {
    total *= static_cast<std::size_t>(domain.points_per_axis);
    if (total > 100000) throw ValidationError("domain grid: too many points, reduce points_per_axis");
  }
  std::vector<Eigen::VectorXd> grid;
  grid.reserve(total);
  Eigen::VectorXd x(dim);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (Eigen::Index axis = 0; axis < dim; ++axis) {
      const int idx = static_cast<int>(rest % domain.points_per_axis);
      rest /= domain.points_per_axis;
      const double t =
          domain.points_per_axis == 1 ? 0.5 : static_cast<double>(idx) / (domain.points_per_axis - 1);
      x(axis) = domain.lo(axis) + t * (domain.hi(axis) - domain.lo(axis));
    }
    grid.push_back(x);
  }
  return grid;
}

}  // namespace

double weighted_map_gap(const StateDependentIFS& reference, const StateDependentIFS& perturbed,
                        const ProbabilityDomain& domain, Norm norm) {
  if (reference.map_count() != perturbed.map_count()) {
    throw ValidationError("weighted_map_gap: systems must have the same number of maps");
  }
  if (reference.dim() != perturbed.dim()) {
    throw ValidationError("weighted_map_gap: systems must share one dimension");
  }
  double worst = 0.0;
  for (const auto& x : domain_grid(domain, reference.dim())) {
    for (double pi : domain.signals) {
      const ProbabilityVector p = reference.probabilities(x, pi);
      double total = 0.0;
      for (std::size_t sigma = 0; sigma < reference.map_count(); ++sigma) {
        total += p[sigma] * vector_norm(reference.map(sigma)(x) - perturbed.map(sigma)(x), norm);
      }
      worst = std::max(worst, total);
    }
  }
  return worst;
}

double probability_gap(const StateDependentIFS& reference, const StateDependentIFS& perturbed,
                       const ProbabilityDomain& domain) {
  if (reference.map_count() != perturbed.map_count()) {
    throw ValidationError("probability_gap: systems must have the same number of maps");
  }
  if (reference.dim() != perturbed.dim()) {
    throw ValidationError("probability_gap: systems must share one dimension");
  }
  double worst = 0.0;
  for (const auto& x : domain_grid(domain, reference.dim())) {
    for (double pi : domain.signals) {
      const ProbabilityVector p = reference.probabilities(x, pi);
      const ProbabilityVector q = perturbed.probabilities(x, pi);
      double total = 0.0;
      for (std::size_t sigma = 0; sigma < p.size(); ++sigma) total += std::abs(p[sigma] - q[sigma]);
      worst = std::max(worst, total);
    }
  }
  return worst;
}

ContractionEstimate estimate_contraction_factor(const StateDependentIFS& ifs, const Eigen::VectorXd& lo,
                                                const Eigen::VectorXd& hi, std::size_t n_pairs, double pi,
                                                RngStream& rng, Norm norm) {
  if (lo.size() != ifs.dim() || hi.size() != ifs.dim()) {
    throw ValidationError("estimate_contraction_factor: box dimension mismatch");
  }
  if (n_pairs == 0) throw ValidationError("estimate_contraction_factor: need at least one pair");
  const Eigen::Index d = ifs.dim();
  double sampled_max = 0.0;
  std::size_t usable = 0;
  Eigen::VectorXd x(d);
  Eigen::VectorXd y(d);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    for (Eigen::Index a = 0; a < d; ++a) x(a) = rng.next_uniform(lo(a), hi(a));
    for (Eigen::Index a = 0; a < d; ++a) y(a) = rng.next_uniform(lo(a), hi(a));
    const double dist = vector_norm(x - y, norm);
    if (dist == 0.0) continue;
    const DiscreteMeasure kx = DiscreteMeasure::from_atoms(transition_kernel(ifs, x, pi));
    const DiscreteMeasure ky = DiscreteMeasure::from_atoms(transition_kernel(ifs, y, pi));
    const double w1 = wasserstein1_discrete(kx, ky, norm).distance;
    sampled_max = std::max(sampled_max, w1 / dist);
    ++usable;
  }
  if (usable == 0) {
    throw ValidationError("estimate_contraction_factor: all sampled state pairs were identical, ratio undefined");
  }
  ContractionEstimate estimate;
  estimate.sampled_max = sampled_max;
  estimate.pairs = usable;
  if (ifs.has_constant_probabilities()) {
    const ProbabilityVector& p = ifs.constant_probabilities();
    double bound = 0.0;
    for (std::size_t sigma = 0; sigma < ifs.map_count(); ++sigma) {
      bound += p[sigma] * ifs.map(sigma).lipschitz(norm);
    }
    estimate.analytic = bound;
    estimate.value = bound;
  } else {
    estimate.value = sampled_max;
  }
  return estimate;
}

double bootstrap_w1_se(std::span<const double> xs, std::span<const double> ys, std::size_t resamples,
                       RngStream& rng) {
  if (resamples < 2) throw ValidationError("bootstrap_w1_se: need at least 2 resamples");
  if (xs.empty() || ys.empty()) throw ValidationError("bootstrap_w1_se: sample sets must be non-empty");
  std::vector<double> rx(xs.size());
  std::vector<double> ry(ys.size());
  std::vector<double> values;
  values.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& v : rx) v = xs[rng.next_below(xs.size())];
    for (auto& v : ry) v = ys[rng.next_below(ys.size())];
    values.push_back(wasserstein1_1d(rx, ry));
  }
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& measure) {
  out << "# schema: measure/v1\n";
  for (Eigen::Index a = 0; a < measure.dim(); ++a) out << "x" << a << ",";
  out << "weight\n";
  for (std::size_t k = 0; k < measure.size(); ++k) {
    const auto p = measure.point(k);
    for (Eigen::Index a = 0; a < measure.dim(); ++a) out << format_double(p(a)) << ",";
    out << format_double(measure.weights()[k]) << "\n";
  }
}

DiscreteMeasure read_measure_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  if (table.header.empty() || table.header.back() != "weight") {
    throw ConfigError("measure csv: last column must be 'weight'");
  }
  const Eigen::Index d = static_cast<Eigen::Index>(table.header.size()) - 1;
  if (d < 1) throw ConfigError("measure csv: needs at least one coordinate column");
  std::vector<double> flat;
  std::vector<double> weights;
  for (const auto& row : table.rows) {
    for (Eigen::Index a = 0; a < d; ++a) flat.push_back(parse_double(row[static_cast<std::size_t>(a)]));
    weights.push_back(parse_double(row.back()));
  }
  return DiscreteMeasure(d, std::move(flat), std::move(weights));
}

}  // namespace crowdsense
