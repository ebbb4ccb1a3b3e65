#include <doctest.h>

#include <armadillo>

#include "surveymeld/errors.hpp"
#include "surveymeld/geometry.hpp"
#include "surveymeld/linalg.hpp"

using namespace meld;

namespace {
arma::mat random_spd(arma::uword n, RngStream& rng) {
  arma::mat b(n, n);
  for (arma::uword i = 0; i < n; ++i)
    for (arma::uword j = 0; j < n; ++j) b(i, j) = rng.normal();
  return b * b.t() + 0.5 * arma::eye(n, n);
}
}  // namespace

TEST_CASE("cholesky recovers hand algebra and round-trips") {
  SpdMatrix m(arma::mat{{4.0, 2.0}, {2.0, 3.0}});
  const arma::mat l = cholesky(m);
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(arma::abs(l * l.t() - m.values()).max() < 1e-12);

  SpdMatrix id(arma::eye(5, 5));
  CHECK(arma::abs(cholesky(id) - arma::eye(5, 5)).max() == 0.0);
}

TEST_CASE("cholesky round-trip accuracy on random matrices") {
  RngStream rng(21, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const arma::mat m = random_spd(8, rng);
    const arma::mat l = cholesky_lower(m);
    const double rel = arma::abs(l * l.t() - m).max() / arma::abs(m).max();
    CHECK(rel < 1e-10);
  }
}

TEST_CASE("cholesky rejects a rank-deficient ICAR precision with pivot info") {
  arma::mat a = {{0.0, 1.0}, {1.0, 0.0}};
  const arma::mat q = icar_precision(a);
  bool threw = false;
  try {
    cholesky(SpdMatrix(q));
  } catch (const NotPositiveDefiniteError& e) {
    threw = true;
    CHECK(e.pivot() == 1);  // the second pivot collapses on a path graph
  }
  CHECK(threw);
}

TEST_CASE("SpdMatrix rejects asymmetry") {
  arma::mat bad = {{1.0, 0.5}, {0.4, 1.0}};
  CHECK_THROWS_AS(SpdMatrix{bad}, DomainError);
}

TEST_CASE("mvn_sample moments and correlation") {
  RngStream rng(22, 0);
  const arma::vec mean = {1.0, 2.0};
  SpdMatrix cov(arma::mat{{1.0, 0.9}, {0.9, 1.0}});
  const long n = 100000;
  arma::mat draws(n, 2);
  for (long i = 0; i < n; ++i) {
    const arma::vec x = mvn_sample(mean, cov, rng);
    draws(i, 0) = x(0);
    draws(i, 1) = x(1);
  }
  CHECK(arma::mean(draws.col(0)) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(arma::mean(draws.col(1)) == doctest::Approx(2.0).epsilon(0.02));
  const arma::mat c = arma::cor(draws);
  CHECK(c(0, 1) == doctest::Approx(0.9).epsilon(0.02));
}

TEST_CASE("mvn_sample propagates factorization failure") {
  RngStream rng(23, 0);
  SpdMatrix degenerate(arma::mat{{0.0, 0.0}, {0.0, 0.0}});
  CHECK_THROWS_AS(mvn_sample(arma::vec{0.0, 0.0}, degenerate, rng),
                  NotPositiveDefiniteError);
}

TEST_CASE("conditional_normal: independence and near-perfect correlation") {
  const arma::vec mean = {1.0, -2.0, 0.5};
  SpdMatrix iso(3.0 * arma::eye(3, 3));
  const auto cn = conditional_normal(mean, iso, 1, arma::vec{10.0, -10.0});
  CHECK(cn.mean == doctest::Approx(-2.0));
  CHECK(cn.var == doctest::Approx(3.0));

  const double r = 1.0 - 1e-9;
  SpdMatrix tight(arma::mat{{1.0, r}, {r, 1.0}});
  const auto cn2 = conditional_normal(arma::vec{0.0, 0.0}, tight, 0, arma::vec{2.0});
  CHECK(cn2.mean == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(cn2.var < 1e-8);
}

TEST_CASE("conditional_normal matches brute-force partitioning on random SPD") {
  RngStream rng(24, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const arma::uword n = 2 + rng.uniform_index(7);  // dim <= 8
    const arma::mat cov = random_spd(n, rng);
    arma::vec mean(n), values(n);
    for (arma::uword i = 0; i < n; ++i) {
      mean(i) = rng.normal();
      values(i) = rng.normal();
    }
    const arma::uword idx = rng.uniform_index(n);

    arma::uvec others(n - 1);
    arma::uword k = 0;
    for (arma::uword j = 0; j < n; ++j)
      if (j != idx) others(k++) = j;

    // independent oracle: direct matrix inversion of the partition formula
    const arma::mat coo = cov(others, others);
    const arma::vec cio = cov.submat(arma::uvec{idx}, others).t();
    const arma::mat coo_inv = arma::inv_sympd(coo);
    const double mu_brute =
        mean(idx) + arma::as_scalar(cio.t() * coo_inv * (values(others) - mean(others)));
    const double var_brute =
        cov(idx, idx) - arma::as_scalar(cio.t() * coo_inv * cio);

    const auto cn = conditional_normal(mean, SpdMatrix(cov), idx, values(others));
    CHECK(std::fabs(cn.mean - mu_brute) < 1e-10);
    CHECK(std::fabs(cn.var - var_brute) < 1e-10);
  }
}

TEST_CASE("precision-canonical sampler reaches the right distribution") {
  RngStream rng(25, 0);
  // N(mu, Sigma) with Sigma = [[2, .6], [.6, 1]]
  const arma::mat sigma = {{2.0, 0.6}, {0.6, 1.0}};
  const arma::mat lambda = arma::inv_sympd(sigma);
  const arma::vec mu = {0.7, -0.3};
  const arma::vec b = lambda * mu;
  const arma::mat l = cholesky_lower(lambda);
  const long n = 100000;
  arma::mat draws(n, 2);
  for (long i = 0; i < n; ++i) {
    const arma::vec x = mvn_sample_precision_chol(l, b, rng);
    draws(i, 0) = x(0);
    draws(i, 1) = x(1);
  }
  CHECK(arma::mean(draws.col(0)) == doctest::Approx(0.7).epsilon(0.05));
  CHECK(arma::mean(draws.col(1)) == doctest::Approx(-0.3).epsilon(0.05));
  const arma::mat emp_cov = arma::cov(draws);
  CHECK(emp_cov(0, 0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(emp_cov(0, 1) == doctest::Approx(0.6).epsilon(0.1));
}

TEST_CASE("mvn log pdf agrees with the quadratic form") {
  const arma::mat cov = {{2.0, 0.3}, {0.3, 1.5}};
  const arma::mat l = cholesky_lower(cov);
  const arma::vec x = {0.4, -1.1}, mean = {0.0, 0.2};
  const arma::vec r = x - mean;
  const double expect = -std::log(2.0 * arma::datum::pi) -
                        0.5 * std::log(arma::det(cov)) -
                        0.5 * arma::as_scalar(r.t() * arma::inv_sympd(cov) * r);
  CHECK(mvn_log_pdf_chol(x, mean, l) == doctest::Approx(expect).epsilon(1e-12));
}
