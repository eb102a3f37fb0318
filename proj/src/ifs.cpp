#include "crowdsense/ifs.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <utility>

namespace crowdsense {

SchurReport verify_schur(const Eigen::MatrixXd& a, double margin) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw ValidationError("verify_schur: matrix must be square and non-empty");
  }
  if (!(margin >= 0.0) || margin >= 1.0) {
    throw ValidationError("verify_schur: margin must lie in [0, 1)");
  }
  double radius = 0.0;
  if (a.rows() == 1) {
    radius = std::abs(a(0, 0));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
    radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  return SchurReport{radius < 1.0 - margin, radius};
}

AffineMap::AffineMap(Eigen::MatrixXd a, Eigen::VectorXd b, double schur_margin)
    : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols()) throw ValidationError("AffineMap: linear part must be square");
  if (a_.rows() != b_.size()) {
    throw ValidationError("AffineMap: linear part is " + std::to_string(a_.rows()) + "x" +
                          std::to_string(a_.cols()) + " but offset has dimension " + std::to_string(b_.size()));
  }
  if (b_.size() < 1) throw ValidationError("AffineMap: dimension must be at least 1");
  const SchurReport report = verify_schur(a_, schur_margin);
  if (!report.stable) {
    throw ValidationError("AffineMap: linear part is not a stable matrix (spectral radius " +
                          std::to_string(report.spectral_radius) + ")");
  }
  spectral_radius_ = report.spectral_radius;
}

AffineMap AffineMap::scalar(double a, double b, double schur_margin) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = a;
  Eigen::VectorXd v(1);
  v(0) = b;
  return AffineMap(std::move(m), std::move(v), schur_margin);
}

AffineMap AffineMap::constant(const Eigen::VectorXd& c) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c.size(), c.size());
  return AffineMap(std::move(m), c);
}

double AffineMap::lipschitz(Norm norm) const { return operator_norm(a_, norm); }

ProbabilityVector::ProbabilityVector(std::vector<double> weights, double sum_tol) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ValidationError("ProbabilityVector: must not be empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw ValidationError("ProbabilityVector: weights must be nonnegative and finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > sum_tol) {
    throw ValidationError("ProbabilityVector: weights sum to " + std::to_string(sum) + ", expected 1 within " +
                          std::to_string(sum_tol));
  }
}

double ProbabilityVector::min_weight() const {
  double m = weights_[0];
  for (double w : weights_) m = std::min(m, w);
  return m;
}

void ProbabilityVector::require_floor(double delta) const {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] < delta) {
      throw ValidationError("ProbabilityVector: weight " + std::to_string(i) + " = " + std::to_string(weights_[i]) +
                            " falls below the floor " + std::to_string(delta));
    }
  }
}

std::size_t sample_index(const ProbabilityVector& p, double q) {
  if (!(q >= 0.0) || q > 1.0) throw ValidationError("sample_index: q must lie in [0, 1]");
  double cum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += p[i];
    if (q < cum) return i;
  }
  // q reached or passed the last boundary (q == 1, or round-off left the
  // total slightly below q): take the last positive-weight bin.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  throw ValidationError("sample_index: no positive weight");
}

StateDependentIFS::StateDependentIFS(std::vector<AffineMap> maps, ProbabilityFn prob_fn,
                                     std::optional<double> probability_floor,
                                     const std::optional<ProbabilityDomain>& spot_check)
    : maps_(std::move(maps)), prob_fn_(std::move(prob_fn)), floor_(probability_floor) {
  if (maps_.empty()) throw ValidationError("StateDependentIFS: needs at least one map");
  const Eigen::Index d = maps_.front().dim();
  for (const auto& m : maps_) {
    if (m.dim() != d) throw ValidationError("StateDependentIFS: all maps must share one dimension");
  }
  if (!prob_fn_) throw ValidationError("StateDependentIFS: probability function must be callable");
  if (floor_ && (*floor_ <= 0.0 || *floor_ * static_cast<double>(maps_.size()) > 1.0)) {
    throw ValidationError("StateDependentIFS: probability floor must be positive and feasible");
  }
  if (spot_check) {
    const ProbabilityDomain& dom = *spot_check;
    if (dom.lo.size() != d || dom.hi.size() != d) {
      throw ValidationError("StateDependentIFS: spot-check domain dimension mismatch");
    }
    if (dom.points_per_axis < 1) throw ValidationError("StateDependentIFS: spot-check grid needs >= 1 point");
    // Walk the full grid; probabilities() validates each tuple.
    std::size_t total = 1;
    for (Eigen::Index axis = 0; axis < d; ++axis) {
      total *= static_cast<std::size_t>(dom.points_per_axis);
      if (total > 100000) throw ValidationError("StateDependentIFS: spot-check grid too large");
    }
    Eigen::VectorXd x(d);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rest = flat;
      for (Eigen::Index axis = 0; axis < d; ++axis) {
        const int idx = static_cast<int>(rest % dom.points_per_axis);
        rest /= dom.points_per_axis;
        const double t = dom.points_per_axis == 1 ? 0.5 : static_cast<double>(idx) / (dom.points_per_axis - 1);
        x(axis) = dom.lo(axis) + t * (dom.hi(axis) - dom.lo(axis));
      }
      for (double pi : dom.signals) probabilities(x, pi);
    }
  }
}

StateDependentIFS StateDependentIFS::with_constant_probabilities(std::vector<AffineMap> maps, ProbabilityVector p,
                                                                 std::optional<double> probability_floor) {
  if (p.size() != maps.size()) {
    throw ValidationError("StateDependentIFS: probability tuple size must match the number of maps");
  }
  ProbabilityVector tuple = p;
  StateDependentIFS ifs(std::move(maps), [tuple](const Eigen::VectorXd&, double) { return tuple; },
                        probability_floor);
  ifs.constant_ = std::move(p);
  if (ifs.floor_) ifs.constant_->require_floor(*ifs.floor_);
  return ifs;
}

ProbabilityVector StateDependentIFS::probabilities(const Eigen::VectorXd& x, double pi) const {
  if (x.size() != dim()) throw ValidationError("StateDependentIFS: state dimension mismatch");
  ProbabilityVector p = constant_ ? *constant_ : prob_fn_(x, pi);
  if (p.size() != maps_.size()) {
    throw ValidationError("StateDependentIFS: probability function returned " + std::to_string(p.size()) +
                          " weights for " + std::to_string(maps_.size()) + " maps");
  }
  if (floor_) p.require_floor(*floor_);
  return p;
}

const ProbabilityVector& StateDependentIFS::constant_probabilities() const {
  if (!constant_) throw ValidationError("StateDependentIFS: probabilities are not constant");
  return *constant_;
}

StepResult step(const StateDependentIFS& ifs, const Eigen::VectorXd& x, double pi, double q) {
  const ProbabilityVector p = ifs.probabilities(x, pi);
  const std::size_t sigma = sample_index(p, q);
  return StepResult{ifs.map(sigma)(x), sigma};
}

Trajectory::Trajectory(Eigen::Index dim, std::vector<double> flat_states, std::vector<std::size_t> indices,
                       std::vector<double> signals)
    : dim_(dim), flat_(std::move(flat_states)), indices_(std::move(indices)), signals_(std::move(signals)) {
  if (dim_ < 1) throw ValidationError("Trajectory: dimension must be at least 1");
  if (signals_.size() != indices_.size()) {
    throw ValidationError("Trajectory: needs exactly one signal per step");
  }
  const std::size_t expected = static_cast<std::size_t>(dim_) * (indices_.size() + 1);
  if (flat_.size() != expected) {
    throw ValidationError("Trajectory: state storage holds " + std::to_string(flat_.size()) +
                          " values, expected " + std::to_string(expected));
  }
}

Eigen::Map<const Eigen::VectorXd> Trajectory::state(std::size_t k) const {
  if (k > steps()) throw ValidationError("Trajectory: state index out of range");
  return Eigen::Map<const Eigen::VectorXd>(flat_.data() + k * static_cast<std::size_t>(dim_), dim_);
}

std::vector<double> Trajectory::coordinate(Eigen::Index coord) const {
  if (coord < 0 || coord >= dim_) throw ValidationError("Trajectory: coordinate out of range");
  std::vector<double> out;
  out.reserve(steps() + 1);
  for (std::size_t k = 0; k <= steps(); ++k) {
    out.push_back(flat_[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(coord)]);
  }
  return out;
}

Trajectory simulate_trajectory(const StateDependentIFS& ifs, const Eigen::VectorXd& x0,
                               std::span<const double> signals, RngStream& rng) {
  if (x0.size() != ifs.dim()) throw ValidationError("simulate_trajectory: initial state dimension mismatch");
  const std::size_t d = static_cast<std::size_t>(ifs.dim());
  std::vector<double> flat;
  flat.reserve(d * (signals.size() + 1));
  std::vector<std::size_t> indices;
  indices.reserve(signals.size());
  Eigen::VectorXd x = x0;
  flat.insert(flat.end(), x.data(), x.data() + d);
  for (double pi : signals) {
    StepResult r = step(ifs, x, pi, rng.next_unit());
    x = std::move(r.state);
    indices.push_back(r.index);
    flat.insert(flat.end(), x.data(), x.data() + d);
  }
  return Trajectory(ifs.dim(), std::move(flat), std::move(indices),
                    std::vector<double>(signals.begin(), signals.end()));
}

std::vector<Eigen::VectorXd> replay(const StateDependentIFS& ifs, const Eigen::VectorXd& x0,
                                    std::span<const std::size_t> indices) {
  if (x0.size() != ifs.dim()) throw ValidationError("replay: initial state dimension mismatch");
  std::vector<Eigen::VectorXd> states;
  states.reserve(indices.size() + 1);
  states.push_back(x0);
  for (std::size_t sigma : indices) {
    if (sigma >= ifs.map_count()) throw ValidationError("replay: map index out of range");
    states.push_back(ifs.map(sigma)(states.back()));
  }
  return states;
}

std::vector<KernelAtom> transition_kernel(const StateDependentIFS& ifs, const Eigen::VectorXd& x, double pi) {
  const ProbabilityVector p = ifs.probabilities(x, pi);
  std::vector<KernelAtom> atoms;
  atoms.reserve(ifs.map_count());
  for (std::size_t sigma = 0; sigma < ifs.map_count(); ++sigma) {
    Eigen::VectorXd image = ifs.map(sigma)(x);
    bool merged = false;
    for (auto& atom : atoms) {
      if (atom.point == image) {
        atom.weight += p[sigma];
        merged = true;
        break;
      }
    }
    if (!merged) atoms.push_back(KernelAtom{std::move(image), p[sigma]});
  }
  return atoms;
}

CouplingResult coupling_distance(const StateDependentIFS& ifs, const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& y0, std::span<const double> signals, RngStream& rng,
                                 Norm norm) {
  if (x0.size() != ifs.dim() || y0.size() != ifs.dim()) {
    throw ValidationError("coupling_distance: initial states must match the system dimension");
  }
  CouplingResult result;
  result.distance.reserve(signals.size() + 1);
  result.indices.reserve(signals.size());
  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = y0;
  result.distance.push_back(vector_norm(x - y, norm));
  for (double pi : signals) {
    const ProbabilityVector p = ifs.probabilities(x, pi);
    const std::size_t sigma = sample_index(p, rng.next_unit());
    x = ifs.map(sigma)(x);
    y = ifs.map(sigma)(y);
    result.indices.push_back(sigma);
    result.distance.push_back(vector_norm(x - y, norm));
  }
  return result;
}

double coupling_rate_bound(const StateDependentIFS& ifs, Norm norm) {
  double bound = 0.0;
  for (const auto& m : ifs.maps()) bound = std::max(bound, m.lipschitz(norm));
  return bound;
}

double probability_lipschitz_estimate(const StateDependentIFS& ifs, const ProbabilityDomain& domain, Norm norm) {
  const Eigen::Index d = ifs.dim();
  if (domain.lo.size() != d || domain.hi.size() != d) {
    throw ValidationError("probability_lipschitz_estimate: domain dimension mismatch");
  }
  if (domain.points_per_axis < 2) {
    throw ValidationError("probability_lipschitz_estimate: need at least 2 points per axis");
  }
  std::size_t total = 1;
  for (Eigen::Index axis = 0; axis < d; ++axis) {
    total *= static_cast<std::size_t>(domain.points_per_axis);
    if (total > 4096) throw ValidationError("probability_lipschitz_estimate: grid too large, reduce points_per_axis");
  }
  std::vector<Eigen::VectorXd> grid;
  grid.reserve(total);
  Eigen::VectorXd x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (Eigen::Index axis = 0; axis < d; ++axis) {
      const int idx = static_cast<int>(rest % domain.points_per_axis);
      rest /= domain.points_per_axis;
      const double t = static_cast<double>(idx) / (domain.points_per_axis - 1);
      x(axis) = domain.lo(axis) + t * (domain.hi(axis) - domain.lo(axis));
    }
    grid.push_back(x);
  }
  double worst = 0.0;
  for (double pi : domain.signals) {
    std::vector<ProbabilityVector> values;
    values.reserve(grid.size());
    for (const auto& g : grid) values.push_back(ifs.probabilities(g, pi));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = i + 1; j < grid.size(); ++j) {
        const double dist = vector_norm(grid[i] - grid[j], norm);
        if (dist == 0.0) continue;
        double l1 = 0.0;
        for (std::size_t k = 0; k < values[i].size(); ++k) l1 += std::abs(values[i][k] - values[j][k]);
        worst = std::max(worst, l1 / dist);
      }
    }
  }
  return worst;
}

}  // namespace crowdsense
