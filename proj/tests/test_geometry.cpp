#include <doctest.h>

#include "surveymeld/errors.hpp"
#include "surveymeld/geometry.hpp"
#include "surveymeld/simulate.hpp"

using namespace meld;

TEST_CASE("exp_correlation basics") {
  arma::mat d = {{0.0, 500.0}, {500.0, 0.0}};
  const SpdMatrix r = exp_correlation(d, 500.0);
  CHECK(r(0, 0) == 1.0);
  CHECK(r(1, 1) == 1.0);
  CHECK(r(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  // phi -> 0+ collapses toward the identity
  const SpdMatrix tiny = exp_correlation(d, 1e-6);
  CHECK(tiny(0, 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(exp_correlation(d, 0.0), DomainError);
  CHECK_THROWS_AS(exp_correlation(d, -1.0), DomainError);
}

TEST_CASE("correlation is monotone in phi") {
  arma::mat d = {{0.0, 1200.0}, {1200.0, 0.0}};
  double prev = 0.0;
  for (double phi : {500.0, 1500.0, 5000.0, 50000.0}) {
    const double r = exp_correlation(d, phi)(0, 1);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("icar precision on small graphs") {
  arma::mat path2 = {{0.0, 1.0}, {1.0, 0.0}};
  const arma::mat q = icar_precision(path2);
  CHECK(q(0, 0) == 1.0);
  CHECK(q(0, 1) == -1.0);
  CHECK(q(1, 0) == -1.0);
  CHECK(q(1, 1) == 1.0);

  // row sums vanish exactly
  CHECK(arma::abs(q * arma::ones(2)).max() == 0.0);

  // 3x3 lattice: interior node has degree 4
  RngStream rng(31, 0);
  auto [geom, ids] = simulate_geometry(3, 0, 15.0, 36.0, 51.2, rng);
  const arma::mat q9 = icar_precision(geom.adjacency);
  CHECK(q9(4, 4) == 4.0);
  CHECK(arma::abs(q9 * arma::ones(9)).max() == 0.0);
}

TEST_CASE("icar precision rejects a disconnected graph") {
  arma::mat disc(4, 4, arma::fill::zeros);
  disc(0, 1) = disc(1, 0) = 1.0;
  disc(2, 3) = disc(3, 2) = 1.0;
  CHECK_THROWS_AS(icar_precision(disc), DataError);
}

TEST_CASE("phi grid caches factorizations and stays SPD") {
  RngStream rng(32, 0);
  auto [geom, ids] = simulate_geometry(4, 3, 15.0, 36.0, 51.2, rng);
  const std::vector<double> support = {1.0, 5001.0, 20001.0, 99001.0};
  const PhiGrid grid = PhiGrid::build(geom, support, 2);
  CHECK(grid.size() == 4);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& e = grid.entry(k);
    CHECK(e.phi == support[k]);
    // cached cholesky and inverse belong to the cached correlation
    CHECK(arma::abs(e.chol * e.chol.t() - e.corr).max() < 1e-10);
    CHECK(arma::abs(e.corr * e.inv - arma::eye(e.corr.n_rows, e.corr.n_cols)).max() <
          1e-8);
    for (arma::uword i = 0; i < e.corr.n_rows; ++i) CHECK(e.corr(i, i) == 1.0);
  }
}

TEST_CASE("default phi support has 100 ascending points ending at 99001") {
  const auto s = default_phi_support();
  CHECK(s.size() == 100);
  CHECK(s.front() == 1.0);
  CHECK(s.back() == 99001.0);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
}

TEST_CASE("phi grid validations") {
  RngStream rng(33, 0);
  auto [geom, ids] = simulate_geometry(3, 1, 15.0, 36.0, 51.2, rng);
  CHECK_THROWS_AS(PhiGrid::build(geom, {}, 1), ConfigError);
  CHECK_THROWS_AS(PhiGrid::build(geom, {10.0, 5.0}, 1), ConfigError);
  CHECK_THROWS_AS(PhiGrid::build(geom, {-1.0}, 1), ConfigError);

  // duplicate centroids are rejected before any factorization
  geom.centroids.row(1) = geom.centroids.row(0);
  CHECK_THROWS_AS(PhiGrid::build(geom, {1000.0}, 1), DataError);
}

TEST_CASE("geometry validation catches adjacency defects") {
  RngStream rng(34, 0);
  auto [geom, ids] = simulate_geometry(3, 1, 15.0, 36.0, 51.2, rng);
  geom.adjacency(0, 1) = 0.0;  // break symmetry
  CHECK_THROWS_AS(geom.validate(), DataError);
}
