#include <doctest.h>

#include <cmath>

#include "surveymeld/distributions.hpp"
#include "surveymeld/errors.hpp"
#include "surveymeld/rng.hpp"

using namespace meld;

namespace {
struct MonteCarlo {
  double mean = 0.0;
  double se = 0.0;
};

template <typename F>
MonteCarlo mc(long n, F&& draw) {
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = draw();
    sum += x;
    sumsq += x * x;
  }
  MonteCarlo out;
  out.mean = sum / double(n);
  const double var = sumsq / double(n) - out.mean * out.mean;
  out.se = std::sqrt(std::max(var, 0.0) / double(n));
  return out;
}
}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool identical = true, differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double ua = a.uniform();
    identical = identical && (ua == b.uniform());
    differs = differs || (ua != c.uniform());
  }
  CHECK(identical);
  CHECK(differs);
}

TEST_CASE("ztp log pmf") {
  // k=2, lambda=2: log(2 e^-2 / (1 - e^-2))
  CHECK(ztp_log_pmf(2, 2.0) ==
        doctest::Approx(std::log(2.0 * std::exp(-2.0) / (1.0 - std::exp(-2.0))))
            .epsilon(1e-12));
  // limit: (k=1, lambda -> 0+) has probability -> 1
  CHECK(ztp_log_pmf(1, 1e-12) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK_THROWS_AS(ztp_log_pmf(0, 1.0), DomainError);

  // normalization at lambda = 5
  double total = 0.0;
  for (long k = 1; k <= 200; ++k) total += std::exp(ztp_log_pmf(k, 5.0));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("ztp sampler matches the analytic mean") {
  RngStream rng(11, 0);
  for (double lambda : {0.5, 2.0, 10.0}) {
    const double expect = lambda / (1.0 - std::exp(-lambda));
    const auto m = mc(100000, [&]() { return double(sample_ztp(lambda, rng)); });
    CHECK(std::fabs(m.mean - expect) < 3.0 * m.se);
  }
}

TEST_CASE("ztp sampler never returns zero") {
  RngStream rng(12, 0);
  for (double lambda : {0.01, 1.0, 50.0}) {
    bool all_positive = true;
    for (int i = 0; i < 1000000; ++i)
      all_positive = all_positive && sample_ztp(lambda, rng) >= 1;
    CHECK(all_positive);
  }
  CHECK_THROWS_AS(sample_ztp(0.0, rng), DomainError);
  CHECK_THROWS_AS(sample_ztp(-1.0, rng), DomainError);
}

TEST_CASE("ztp degenerates to 1 as lambda -> 0") {
  RngStream rng(13, 0);
  long ones = 0;
  for (int i = 0; i < 10000; ++i) ones += sample_ztp(1e-8, rng) == 1 ? 1 : 0;
  CHECK(ones == 10000);
}

TEST_CASE("poisson sampler spans both regimes") {
  RngStream rng(14, 0);
  for (double lambda : {0.3, 5.0, 40.0, 300.0}) {
    const auto m = mc(60000, [&]() { return double(sample_poisson(lambda, rng)); });
    CHECK(std::fabs(m.mean - lambda) < 4.0 * m.se);
  }
}

TEST_CASE("polya-gamma mean matches b/(2c) tanh(c/2)") {
  RngStream rng(15, 0);
  // c = 0 limit: mean b/4
  auto m0 = mc(100000, [&]() { return sample_polya_gamma(1, 0.0, rng); });
  CHECK(std::fabs(m0.mean - 0.25) < 3.0 * m0.se);

  for (int b : {1, 2, 5}) {
    for (double c : {0.1, 1.0, 3.0}) {
      const double expect = double(b) / (2.0 * c) * std::tanh(c / 2.0);
      const auto m = mc(100000, [&]() { return sample_polya_gamma(b, c, rng); });
      CHECK(std::fabs(m.mean - expect) < 3.0 * m.se);
    }
  }
  CHECK_THROWS_AS(sample_polya_gamma(0, 1.0, rng), DomainError);
}

TEST_CASE("polya-gamma is symmetric in the sign of c") {
  RngStream rng(16, 0);
  const auto mp = mc(50000, [&]() { return sample_polya_gamma(1, 2.0, rng); });
  const auto mn = mc(50000, [&]() { return sample_polya_gamma(1, -2.0, rng); });
  CHECK(std::fabs(mp.mean - mn.mean) < 3.0 * std::hypot(mp.se, mn.se));
}

TEST_CASE("truncated normal stays in support") {
  RngStream rng(17, 0);
  const double inf = std::numeric_limits<double>::infinity();

  bool ok = true;
  for (int i = 0; i < 200000; ++i) {
    const double x = sample_truncated_normal(5.0, 1.0, -1.0, 1.0, rng);
    ok = ok && x > -1.0 && x < 1.0;
  }
  CHECK(ok);

  // far-tail one-sided: 8 sigma
  ok = true;
  for (int i = 0; i < 200000; ++i) {
    const double x = sample_truncated_normal(0.0, 1.0, 8.0, inf, rng);
    ok = ok && x > 8.0;
  }
  CHECK(ok);

  // far-tail narrow band
  ok = true;
  for (int i = 0; i < 200000; ++i) {
    const double x = sample_truncated_normal(0.0, 1.0, 8.0, 8.05, rng);
    ok = ok && x > 8.0 && x < 8.05;
  }
  CHECK(ok);

  CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, 1.0, 1.0, rng), DomainError);
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 0.0, 0.0, 1.0, rng), DomainError);
}

TEST_CASE("truncated normal half-line mean") {
  RngStream rng(18, 0);
  const double inf = std::numeric_limits<double>::infinity();
  // N(0,1) on (-inf, 0): mean -sqrt(2/pi)
  const auto m =
      mc(100000, [&]() { return sample_truncated_normal(0.0, 1.0, -inf, 0.0, rng); });
  CHECK(std::fabs(m.mean + std::sqrt(2.0 / M_PI)) < 3.0 * m.se);

  // no truncation: ordinary normal
  const auto mfull =
      mc(100000, [&]() { return sample_truncated_normal(0.0, 1.0, -inf, inf, rng); });
  CHECK(std::fabs(mfull.mean) < 3.0 * mfull.se);
}

TEST_CASE("gamma / beta / inverse-gamma moments") {
  RngStream rng(19, 0);
  const auto g = mc(100000, [&]() { return sample_gamma(1.78, 0.675, rng); });
  CHECK(std::fabs(g.mean - 1.78 * 0.675) < 3.0 * g.se);

  const auto g_small = mc(100000, [&]() { return sample_gamma(0.4, 2.0, rng); });
  CHECK(std::fabs(g_small.mean - 0.8) < 3.0 * g_small.se);

  const auto be = mc(100000, [&]() { return sample_beta(4.0, 3.0, rng); });
  CHECK(std::fabs(be.mean - 4.0 / 7.0) < 3.0 * be.se);

  // IG(shape a, scale b) has mean b/(a-1) for a > 1
  const auto ig = mc(100000, [&]() { return sample_inverse_gamma(5.0, 8.0, rng); });
  CHECK(std::fabs(ig.mean - 2.0) < 4.0 * ig.se);
}

TEST_CASE("normal log cdf far tail matches the Mills expansion") {
  // interior agreement with the direct evaluation
  for (double z : {-7.9, -5.0, -1.0, 0.0, 2.0}) {
    CHECK(normal_log_cdf(z) ==
          doctest::Approx(std::log(normal_cdf(z))).epsilon(1e-9));
  }
  // tail values stay finite and ordered
  CHECK(normal_log_cdf(-10.0) < normal_log_cdf(-9.0));
  CHECK(std::isfinite(normal_log_cdf(-40.0)));
}
