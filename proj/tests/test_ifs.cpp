#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"

#include "crowdsense/errors.hpp"
#include "crowdsense/ifs.hpp"
#include "crowdsense/rng.hpp"

using namespace crowdsense;

namespace {

// Two-map on/off system {x -> 1, x -> 0} with constant weights (p_on, 1-p_on).
StateDependentIFS on_off_system(double p_on) {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::constant(Eigen::VectorXd::Ones(1)));
  maps.push_back(AffineMap::constant(Eigen::VectorXd::Zero(1)));
  return StateDependentIFS::with_constant_probabilities(std::move(maps),
                                                        ProbabilityVector({p_on, 1.0 - p_on}));
}

}  // namespace

TEST_CASE("schur check accepts contractive and rejects expanding matrices") {
  Eigen::MatrixXd a(1, 1);
  a << 0.9;
  const SchurReport ok = verify_schur(a);
  CHECK(ok.stable);
  CHECK(ok.spectral_radius == doctest::Approx(0.9).epsilon(1e-12));

  CHECK_FALSE(verify_schur(Eigen::MatrixXd::Identity(2, 2)).stable);

  Eigen::MatrixXd expanding(2, 2);
  expanding << 1.5, 0.0, 0.0, 0.1;
  CHECK_FALSE(verify_schur(expanding).stable);
}

TEST_CASE("spectral radius of a triangular matrix is its largest diagonal entry") {
  Eigen::MatrixXd a(2, 2);
  a << 0.9, 0.5, 0.0, 0.3;
  CHECK(verify_schur(a).spectral_radius == doctest::Approx(0.9).epsilon(1e-10));
}

TEST_CASE("spectral radius matches the 2x2 characteristic polynomial oracle") {
  RngStream rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix2d a;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) a(i, j) = rng.next_uniform(-1.0, 1.0);
    }
    CHECK(verify_schur(a).spectral_radius == doctest::Approx(oracles::radius_2x2(a)).epsilon(1e-9));
  }
}

TEST_CASE("rotation-scale matrices have complex eigenvalues with known modulus") {
  const double theta = 0.7;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::MatrixXd a = 0.95 * rot;
  const SchurReport report = verify_schur(a);
  CHECK(report.stable);
  CHECK(report.spectral_radius == doctest::Approx(0.95).epsilon(1e-10));
}

TEST_CASE("margin rejects a radius within 1e-9 of one") {
  Eigen::MatrixXd a(1, 1);
  a << 1.0 - 1e-12;
  CHECK_FALSE(verify_schur(a, 1e-9).stable);
  CHECK(verify_schur(a, 1e-15).stable);
}

TEST_CASE("affine map construction enforces stability and shape") {
  CHECK_THROWS_AS(AffineMap(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)), ValidationError);
  Eigen::MatrixXd a(2, 3);
  a.setZero();
  CHECK_THROWS_AS(AffineMap(a, Eigen::VectorXd::Zero(2)), ValidationError);
  CHECK_THROWS_AS(AffineMap(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(3)), ValidationError);
  CHECK_NOTHROW(AffineMap::scalar(0.999, 1.0));
}

TEST_CASE("lipschitz constant of a scalar map is |a|") {
  const AffineMap map = AffineMap::scalar(-0.5, 2.0);
  for (Norm norm : {Norm::one, Norm::two, Norm::max}) {
    CHECK(map.lipschitz(norm) == doctest::Approx(0.5));
  }
}

TEST_CASE("probability vectors validate mass and nonnegativity") {
  CHECK_NOTHROW(ProbabilityVector({0.25, 0.75}));
  CHECK_THROWS_AS(ProbabilityVector({0.25, 0.74}), ValidationError);
  CHECK_THROWS_AS(ProbabilityVector({-0.1, 1.1}), ValidationError);
  const ProbabilityVector p({1e-4, 1.0 - 1e-4});
  CHECK(p.min_weight() == doctest::Approx(1e-4));
  CHECK_THROWS_AS(p.require_floor(1e-3), ValidationError);
  CHECK_NOTHROW(p.require_floor(1e-5));
}

TEST_CASE("sample_index maps draws to cumulative bins") {
  const ProbabilityVector p({0.25, 0.75});
  CHECK(sample_index(p, 0.0) == 0);
  CHECK(sample_index(p, 0.2499) == 0);
  CHECK(sample_index(p, 0.25) == 1);
  CHECK(sample_index(p, 0.999) == 1);
  CHECK(sample_index(p, 1.0) == 1);
}

TEST_CASE("zero-width bins are never selected") {
  const ProbabilityVector middle_zero({0.5, 0.0, 0.5});
  CHECK(sample_index(middle_zero, 0.5) == 2);
  CHECK(sample_index(middle_zero, 0.7) == 2);
  const ProbabilityVector trailing_zero({0.5, 0.5, 0.0});
  CHECK(sample_index(trailing_zero, 1.0) == 1);
  CHECK(sample_index(trailing_zero, 0.999999) == 1);
}

TEST_CASE("empirical draw frequencies match the weights") {
  const ProbabilityVector p({0.25, 0.75});
  RngStream rng(5);
  std::vector<std::size_t> counts(2, 0);
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    ++counts[sample_index(p, rng.next_unit())];
  }
  const double stat = oracles::chi_square_statistic(counts, {0.25, 0.75}, n);
  CHECK(stat < oracles::chi_square_critical_001(1));
}

TEST_CASE("state-dependent system validates tuple size and floor on a grid") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.5, 0.0));
  maps.push_back(AffineMap::scalar(0.5, 0.5));

  // Tuple with the wrong arity must be rejected at the spot check.
  ProbabilityFn wrong_arity = [](const Eigen::VectorXd&, double) {
    return ProbabilityVector({1.0});
  };
  ProbabilityDomain domain;
  domain.lo = Eigen::VectorXd::Zero(1);
  domain.hi = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(StateDependentIFS(maps, wrong_arity, std::nullopt, domain), ValidationError);

  // Floor violation somewhere on the grid must be rejected.
  ProbabilityFn floor_breaker = [](const Eigen::VectorXd& x, double) {
    const double p = x(0) > 0.9 ? 1e-5 : 0.5;
    return ProbabilityVector({p, 1.0 - p});
  };
  CHECK_THROWS_AS(StateDependentIFS(maps, floor_breaker, 1e-3, domain), ValidationError);
  CHECK_NOTHROW(StateDependentIFS(maps, floor_breaker, std::nullopt, std::nullopt));
}

TEST_CASE("trajectory keeps one more state than steps and records signals") {
  const StateDependentIFS ifs = on_off_system(0.75);
  RngStream rng(9);
  const std::vector<double> signals(50, 0.0);
  const Trajectory t = simulate_trajectory(ifs, Eigen::VectorXd::Zero(1), signals, rng);
  CHECK(t.steps() == 50);
  CHECK(t.signals().size() == 50);
  CHECK(t.chosen_indices().size() == 50);
  CHECK(t.dim() == 1);
  for (std::size_t k = 1; k <= 50; ++k) {
    const double x = t.state(k)(0);
    CHECK((x == 0.0 || x == 1.0));
  }
}

TEST_CASE("replay reproduces a recorded trajectory bit for bit") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.6, 0.1));
  maps.push_back(AffineMap::scalar(-0.3, 0.7));
  ProbabilityFn prob = [](const Eigen::VectorXd& x, double) {
    const double p = 0.3 + 0.4 / (1.0 + x(0) * x(0));
    return ProbabilityVector({p, 1.0 - p});
  };
  const StateDependentIFS ifs(maps, prob);

  RngStream rng(13);
  Eigen::VectorXd x0(1);
  x0 << 0.2;
  const std::vector<double> signals(200, 0.0);
  const Trajectory t = simulate_trajectory(ifs, x0, signals, rng);

  const std::vector<Eigen::VectorXd> replayed = replay(ifs, x0, t.chosen_indices());
  REQUIRE(replayed.size() == t.steps() + 1);
  for (std::size_t k = 0; k <= t.steps(); ++k) {
    CHECK(std::memcmp(replayed[k].data(), t.state(k).data(), sizeof(double)) == 0);
  }
}

TEST_CASE("transition kernel merges exactly equal images") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.5, 0.0));
  maps.push_back(AffineMap::scalar(0.5, 0.0));
  const StateDependentIFS same(StateDependentIFS::with_constant_probabilities(
      std::move(maps), ProbabilityVector({0.3, 0.7})));
  Eigen::VectorXd x(1);
  x << 1.0;
  const auto atoms = transition_kernel(same, x, 0.0);
  REQUIRE(atoms.size() == 1);
  CHECK(atoms[0].weight == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(atoms[0].point(0) == doctest::Approx(0.5));
}

TEST_CASE("transition kernel lists distinct images with their weights") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.5, 0.0));
  maps.push_back(AffineMap::scalar(0.5, 0.5));
  const StateDependentIFS ifs(StateDependentIFS::with_constant_probabilities(
      std::move(maps), ProbabilityVector({0.3, 0.7})));
  const auto atoms = transition_kernel(ifs, Eigen::VectorXd::Zero(1), 0.0);
  REQUIRE(atoms.size() == 2);
  CHECK(atoms[0].point(0) == doctest::Approx(0.0));
  CHECK(atoms[0].weight == doctest::Approx(0.3));
  CHECK(atoms[1].point(0) == doctest::Approx(0.5));
  CHECK(atoms[1].weight == doctest::Approx(0.7));
}

TEST_CASE("coupled trajectories contract exactly on the dyadic two-map system") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.5, 0.0));
  maps.push_back(AffineMap::scalar(0.5, 0.5));
  const StateDependentIFS ifs(StateDependentIFS::with_constant_probabilities(
      std::move(maps), ProbabilityVector({0.5, 0.5})));

  RngStream rng(21);
  Eigen::VectorXd x0(1), y0(1);
  x0 << 0.0;
  y0 << 1.0;
  const std::vector<double> signals(50, 0.0);
  const CouplingResult coupling = coupling_distance(ifs, x0, y0, signals, rng);
  REQUIRE(coupling.distance.size() == 51);

  // Halving a dyadic distance is exact in binary floating point, so the
  // coupled distance equals 2^-k with no rounding error at all.
  double expected = 1.0;
  for (std::size_t k = 0; k <= 50; ++k) {
    CHECK(coupling.distance[k] == expected);
    expected *= 0.5;
  }
  CHECK(coupling_rate_bound(ifs) == doctest::Approx(0.5));
}

TEST_CASE("coupling rate bound is the worst map lipschitz constant") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.2, 0.0));
  maps.push_back(AffineMap::scalar(-0.8, 0.1));
  const StateDependentIFS ifs(StateDependentIFS::with_constant_probabilities(
      std::move(maps), ProbabilityVector({0.5, 0.5})));
  CHECK(coupling_rate_bound(ifs) == doctest::Approx(0.8));
}

TEST_CASE("coupled distance respects the geometric envelope for random systems") {
  RngStream seed_rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const double a1 = seed_rng.next_uniform(-0.9, 0.9);
    const double a2 = seed_rng.next_uniform(-0.9, 0.9);
    std::vector<AffineMap> maps;
    maps.push_back(AffineMap::scalar(a1, seed_rng.next_uniform(-1.0, 1.0)));
    maps.push_back(AffineMap::scalar(a2, seed_rng.next_uniform(-1.0, 1.0)));
    ProbabilityFn prob = [](const Eigen::VectorXd& x, double) {
      const double p = 0.2 + 0.6 / (1.0 + std::abs(x(0)));
      return ProbabilityVector({p, 1.0 - p});
    };
    const StateDependentIFS ifs(maps, prob);
    const double rate = coupling_rate_bound(ifs);

    RngStream rng(1000 + trial);
    Eigen::VectorXd x0(1), y0(1);
    x0 << -1.0;
    y0 << 2.0;
    const std::vector<double> signals(30, 0.0);
    const CouplingResult coupling = coupling_distance(ifs, x0, y0, signals, rng);
    double envelope = coupling.distance[0];
    for (std::size_t k = 1; k < coupling.distance.size(); ++k) {
      envelope *= rate;
      CHECK(coupling.distance[k] <= envelope * (1.0 + 1e-12) + 1e-300);
    }
  }
}

TEST_CASE("probability lipschitz estimate is zero for constant tuples") {
  const StateDependentIFS ifs = on_off_system(0.75);
  ProbabilityDomain domain;
  domain.lo = Eigen::VectorXd::Zero(1);
  domain.hi = Eigen::VectorXd::Ones(1);
  CHECK(probability_lipschitz_estimate(ifs, domain) == doctest::Approx(0.0));
}

TEST_CASE("probability lipschitz estimate recovers a linear tuple slope") {
  std::vector<AffineMap> maps;
  maps.push_back(AffineMap::scalar(0.5, 0.0));
  maps.push_back(AffineMap::scalar(0.5, 0.5));
  // p(x) = (0.4 + 0.1 x, ...) on [0, 1]: the l1 change is 0.2 per unit x.
  ProbabilityFn prob = [](const Eigen::VectorXd& x, double) {
    const double p = 0.4 + 0.1 * x(0);
    return ProbabilityVector({p, 1.0 - p});
  };
  const StateDependentIFS ifs(maps, prob);
  ProbabilityDomain domain;
  domain.lo = Eigen::VectorXd::Zero(1);
  domain.hi = Eigen::VectorXd::Ones(1);
  domain.points_per_axis = 9;
  CHECK(probability_lipschitz_estimate(ifs, domain, Norm::two) == doctest::Approx(0.2).epsilon(1e-9));
}
