#include "surveymeld/distributions.hpp"

#include <cmath>
#include <limits>

#include "surveymeld/errors.hpp"

namespace meld {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log1pexp(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double normal_log_pdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw DomainError("normal_log_pdf: variance must be positive");
  const double r = x - mean;
  return -0.5 * std::log(2.0 * kPi * var) - 0.5 * r * r / var;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_log_cdf(double z) {
  if (z > -8.0) return std::log(normal_cdf(z));
  // Mills ratio: Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6)
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * std::log(2.0 * kPi) - 0.5 * z2 - std::log(-z) + std::log(series);
}

double lchoose(long n, long k) {
  if (k < 0 || k > n) return -kInf;
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

double binomial_log_pmf(long k, long n, double p) {
  if (k < 0 || k > n) return -kInf;
  if (p <= 0.0) return k == 0 ? 0.0 : -kInf;
  if (p >= 1.0) return k == n ? 0.0 : -kInf;
  return lchoose(n, k) + double(k) * std::log(p) +
         double(n - k) * std::log1p(-p);
}

double poisson_log_pmf(long k, double lambda) {
  if (k < 0) return -kInf;
  if (!(lambda > 0.0)) throw DomainError("poisson_log_pmf: lambda must be positive");
  return double(k) * std::log(lambda) - lambda - std::lgamma(double(k) + 1.0);
}

double ztp_log_pmf(long k, double lambda) {
  if (k < 1) throw DomainError("ztp_log_pmf: k must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("ztp_log_pmf: lambda must be positive and finite");
  // log[ lambda^k e^{-lambda} / (k! (1 - e^{-lambda})) ]
  return double(k) * std::log(lambda) - lambda - std::lgamma(double(k) + 1.0) -
         std::log(-std::expm1(-lambda));
}

double ztp_mean(double lambda) {
  if (!(lambda > 0.0)) throw DomainError("ztp_mean: lambda must be positive");
  return lambda / (-std::expm1(-lambda));
}

long sample_poisson(double lambda, RngStream& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("sample_poisson: lambda must be positive and finite");
  if (lambda < 10.0) {
    // Multiplicative inversion (Knuth).
    const double limit = std::exp(-lambda);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= rng.uniform();
    } while (p > limit);
    return k - 1;
  }
  // PTRS transformed rejection (Hormann 1993).
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return long(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const long k = long(kf);
    const double lhs =
        std::log(v * inv_alpha / (a / (us * us) + b));
    const double rhs = kf * log_lambda - lambda - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return k;
  }
}

long sample_ztp(double lambda, RngStream& rng) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("sample_ztp: lambda must be positive and finite");
  if (lambda < 1.0) {
    // Inverse CDF over k >= 1; the discard-zero loop would stall as
    // lambda -> 0.
    const double u = rng.uniform();
    double pk = lambda * std::exp(-lambda) / (-std::expm1(-lambda));
    double cum = pk;
    long k = 1;
    while (u > cum && k < 1000) {
      ++k;
      pk *= lambda / double(k);
      cum += pk;
    }
    return k;
  }
  for (;;) {
    const long x = sample_poisson(lambda, rng);
    if (x >= 1) return x;
  }
}

double sample_gamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw DomainError("sample_gamma: shape and scale must be positive");
  if (shape < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(shape + 1.0, scale, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

double sample_beta(double a, double b, RngStream& rng) {
  if (!(a > 0.0) || !(b > 0.0))
    throw DomainError("sample_beta: both shapes must be positive");
  const double ga = sample_gamma(a, 1.0, rng);
  const double gb = sample_gamma(b, 1.0, rng);
  return ga / (ga + gb);
}

double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw DomainError("sample_inverse_gamma: shape and scale must be positive");
  return 1.0 / sample_gamma(shape, 1.0 / scale, rng);
}

// --- Polya-Gamma -------------------------------------------------------------

namespace {

constexpr double kPgTrunc = 0.64;

// Piecewise coefficients of the alternating series for the Jacobi density.
double pg_coef(int n, double x) {
  const double np = double(n) + 0.5;
  if (x <= kPgTrunc) {
    return kPi * np * std::pow(2.0 / (kPi * x), 1.5) *
           std::exp(-2.0 * np * np / x);
  }
  return kPi * np * std::exp(-np * np * kPi * kPi * x / 2.0);
}

// Inverse-Gaussian(mu, 1) truncated to (0, t); Devroye's two-regime scheme.
double pg_trunc_inv_gauss(double z, double t, RngStream& rng) {
  if (z < 1.0 / t) {
    // mu > t: scaled inverse chi-square proposal with exp(-z^2 x / 2) thinning
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      const double x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      if (std::log(rng.uniform()) <= -0.5 * z * z * x) return x;
    }
  }
  const double mu = 1.0 / z;
  const double mu2 = mu * mu;
  for (;;) {
    const double nu = rng.normal();
    const double y = nu * nu;
    double x = mu + 0.5 * mu2 * y -
               0.5 * mu * std::sqrt(4.0 * mu * y + mu2 * y * y);
    // Michael-Schucany-Haas reflection
    if (rng.uniform() > mu / (mu + x)) x = mu2 / x;
    if (x < t) return x;
  }
}

// One exact PG(1, c) draw.
double pg_draw_one(double c, RngStream& rng) {
  const double z = 0.5 * std::fabs(c);
  const double t = kPgTrunc;
  const double kappa = kPi * kPi / 8.0 + 0.5 * z * z;
  const double sqrt_t = std::sqrt(t);
  // Mass of the exponential right piece vs the inverse-Gaussian left piece.
  const double p = (kPi / (2.0 * kappa)) * std::exp(-kappa * t);
  const double q =
      2.0 * (std::exp(-z + normal_log_cdf((t * z - 1.0) / sqrt_t)) +
             std::exp(z + normal_log_cdf(-(t * z + 1.0) / sqrt_t)));
  const double ratio = p / (p + q);
  for (;;) {
    double x;
    if (rng.uniform() < ratio) {
      x = t + rng.exponential() / kappa;
    } else {
      x = pg_trunc_inv_gauss(z, t, rng);
    }
    // Squeeze on the alternating series.
    double s = pg_coef(0, x);
    const double y = rng.uniform() * s;
    int n = 0;
    for (;;) {
      ++n;
      if (n % 2 == 1) {
        s -= pg_coef(n, x);
        if (y <= s) return x / 4.0;
      } else {
        s += pg_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

}  // namespace

double sample_polya_gamma(int b, double c, RngStream& rng) {
  if (b < 1) throw DomainError("sample_polya_gamma: b must be a positive integer");
  double total = 0.0;
  for (int i = 0; i < b; ++i) total += pg_draw_one(c, rng);
  return total;
}

// --- truncated normal --------------------------------------------------------

namespace {

// One-sided standard normal truncated to [a, inf).
double tn_lower_std(double a, RngStream& rng) {
  if (a <= 0.4) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a) return z;
    }
  }
  // Robert (1995) exponential-proposal rejection; efficient arbitrarily far
  // into the tail.
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / alpha;
    const double r = z - alpha;
    if (std::log(rng.uniform()) <= -0.5 * r * r) return z;
  }
}

// Standard normal truncated to (a, b), handling infinities.
double tn_std(double a, double b, RngStream& rng) {
  if (a == -kInf && b == kInf) return rng.normal();
  if (a == -kInf) return -tn_lower_std(-b, rng);
  if (b == kInf) return tn_lower_std(a, rng);
  if (b < 0.0) return -tn_std(-b, -a, rng);
  if (a <= 0.0) {
    if (b - a >= 1.0) {
      for (;;) {
        const double z = rng.normal();
        if (z > a && z < b) return z;
      }
    }
    for (;;) {
      const double z = a + (b - a) * rng.uniform();
      if (std::log(rng.uniform()) <= -0.5 * z * z && z > a && z < b) return z;
    }
  }
  // 0 < a < b
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  if ((b - a) * alpha < 0.35) {
    // Narrow band: uniform proposal, density bounded by its value at a.
    for (;;) {
      const double z = a + (b - a) * rng.uniform();
      if (std::log(rng.uniform()) <= 0.5 * (a * a - z * z) && z > a && z < b)
        return z;
    }
  }
  for (;;) {
    const double z = tn_lower_std(a, rng);
    if (z < b) return z;
  }
}

}  // namespace

double sample_truncated_normal(double mu, double sigma2, double lower,
                               double upper, RngStream& rng) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw DomainError("sample_truncated_normal: sigma2 must be positive");
  if (!(lower < upper))
    throw DomainError("sample_truncated_normal: lower must be < upper");
  const double sigma = std::sqrt(sigma2);
  const double a = (lower == -kInf) ? -kInf : (lower - mu) / sigma;
  const double b = (upper == kInf) ? kInf : (upper - mu) / sigma;
  for (;;) {
    const double x = mu + sigma * tn_std(a, b, rng);
    if (x > lower && x < upper) return x;  // guard against rounding at bounds
  }
}

}  // namespace meld
